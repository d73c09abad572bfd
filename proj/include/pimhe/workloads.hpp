#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pimhe/bfv.hpp"
#include "pimhe/pimsim.hpp"

namespace pimhe {

// A pipeline whose worst-case plaintext magnitude cannot stay below t
// refuses to run; the message names the violated bound and where.
class OverflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// One row per user.  Plain statistics: the row holds that user's values.
// Regression: the row is a flat sequence of samples, three features each.
struct UserDataset {
    std::vector<std::vector<std::uint64_t>> rows;

    std::size_t users() const { return rows.size(); }
};

// Uniform values in [0, max_value], `per_user` per row.
UserDataset synthetic_values(std::uint64_t users, std::uint64_t per_user,
                             std::uint64_t max_value, std::uint64_t seed);

// `samples_per_user` three-feature samples per row, features in [0, max_value].
UserDataset synthetic_features(std::uint64_t users, std::uint64_t samples_per_user,
                               std::uint64_t max_value, std::uint64_t seed);

// One CSV line per user, comma-separated non-negative integers, no header.
UserDataset load_dataset_csv(const std::string& path);

// Exact reduced fraction; den > 0.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational make(std::int64_t num, std::int64_t den);
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

struct Stage {
    std::string name;
    KernelReport report;
};

struct PipelineResult {
    std::string workload;
    bool functional = true; // false when produced by cost-only estimation
    std::vector<Rational> answers;
    std::vector<Stage> stages;
    double host_ms = 0.0; // host finalization estimate (decryption work at 3 GHz)

    KernelReport total() const;
    nlohmann::ordered_json to_json() const;
};

enum class MeanLayout {
    packed,   // one ciphertext per user, values in coefficient slots
    per_value // one constant-coefficient ciphertext per value
};

enum class WeightMode {
    encrypted, // weights arrive as ordinary encryptions
    plaintext  // weights embedded as noiseless encryptions for comparison
};

struct WorkloadOptions {
    std::uint64_t enc_seed = 1;
    bool cost_only = false;
    MeanLayout mean_layout = MeanLayout::packed;
    WeightMode weight_mode = WeightMode::encrypted;
    bool allow_general_features = false; // regression feature counts other than 3
};

// Tree-sums every user's data on the simulated device, then decrypts the
// single sum and divides by the value count on the host.  Exact.
PipelineResult mean_pipeline(const HeParams& params, const KeyPair& keys, const UserDataset& data,
                             const PimConfig& cfg, const WorkloadOptions& opt = {});

// Squares every value on the device, tree-sums squares and values, then
// computes E[x^2] - (E[x])^2 on the host in exact rationals.
PipelineResult variance_pipeline(const HeParams& params, const KeyPair& keys,
                                 const UserDataset& data, const PimConfig& cfg,
                                 const WorkloadOptions& opt = {});

struct RegressionModel {
    std::vector<std::uint64_t> weights; // one per feature
    std::uint64_t bias = 0;
};

// Encrypted dot product per sample: one multiplication per feature, summed,
// plus the bias.  Predictions are exact mod t.
PipelineResult linreg_pipeline(const HeParams& params, const KeyPair& keys,
                               const UserDataset& data, const RegressionModel& model,
                               const PimConfig& cfg, const WorkloadOptions& opt = {});

// Plain-integer oracles over the same rows.
Rational oracle_mean(const UserDataset& data);
Rational oracle_variance(const UserDataset& data);
std::vector<std::uint64_t> oracle_linreg(const UserDataset& data, const RegressionModel& model,
                                         std::uint64_t t);

} // namespace pimhe
