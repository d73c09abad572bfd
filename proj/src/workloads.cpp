#include "pimhe/workloads.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pimhe/prng.hpp"
#include "pimhe/serialize.hpp"

namespace pimhe {

namespace {

constexpr double kHostGhz = 3.0;

void require_dataset(const UserDataset& data, const HeParams& params) {
    if (data.rows.empty()) throw std::invalid_argument("dataset needs at least one user");
    for (std::size_t u = 0; u < data.rows.size(); ++u) {
        if (data.rows[u].empty())
            throw std::invalid_argument("dataset: user " + std::to_string(u) + " has no values");
        for (std::size_t i = 0; i < data.rows[u].size(); ++i)
            if (data.rows[u][i] >= params.t)
                throw std::invalid_argument(
                    "dataset: value " + std::to_string(data.rows[u][i]) + " at user " +
                    std::to_string(u) + ", column " + std::to_string(i) +
                    " is not below t = " + std::to_string(params.t));
    }
}

std::size_t uniform_length(const UserDataset& data) {
    const std::size_t len = data.rows[0].size();
    for (std::size_t u = 1; u < data.rows.size(); ++u)
        if (data.rows[u].size() != len)
            throw std::invalid_argument("dataset rows must have equal length (user " +
                                        std::to_string(u) + " has " +
                                        std::to_string(data.rows[u].size()) + ", expected " +
                                        std::to_string(len) + ")");
    return len;
}

std::uint64_t decrypt_events(const HeParams& params, int comps) {
    const int n = params.ring->n;
    const int w = params.ring->coeff_width;
    InstrCounter per_step = cost::poly_negacyclic_mul_cost(n, w) + cost::poly_add_cost(n, w);
    InstrCounter total;
    total.add_scaled(per_step, static_cast<std::uint64_t>(comps - 1));
    return total.total_events();
}

double events_to_host_ms(std::uint64_t events) {
    return static_cast<double>(events) / (kHostGhz * 1e6);
}

// Noiseless embedding of a scalar: decrypts to v under any secret key.
Ciphertext trivial_encryption(const HeParams& params, std::uint64_t v) {
    const RingParams& r = *params.ring;
    Ciphertext ct;
    ct.comps.push_back(zero_poly(params.ring));
    ct.comps.push_back(zero_poly(params.ring));
    ct.comps[0].coeffs[0] =
        mod_mul(params.delta, WideInt::from_u64(v % params.t, r.coeff_width), r.barrett);
    ct.mul_count = 0;
    return ct;
}

struct Encryptor {
    const HeParams& params;
    const PublicKey& pk;
    std::uint64_t next_seed;

    Ciphertext scalar(std::uint64_t v) {
        return encrypt(params, pk, encode_scalar(params, v), next_seed++);
    }
    Ciphertext vector(const std::vector<std::uint64_t>& vs) {
        return encrypt(params, pk, encode_vector(params, vs), next_seed++);
    }
};

} // namespace

UserDataset synthetic_values(std::uint64_t users, std::uint64_t per_user, std::uint64_t max_value,
                             std::uint64_t seed) {
    if (users == 0 || per_user == 0)
        throw std::invalid_argument("synthetic dataset needs positive user and value counts");
    Prng rng(seed);
    UserDataset data;
    data.rows.resize(users);
    for (auto& row : data.rows) {
        row.resize(per_user);
        for (auto& v : row)
            v = max_value == std::numeric_limits<std::uint64_t>::max() ? rng.next()
                                                                       : rng.below(max_value + 1);
    }
    return data;
}

UserDataset synthetic_features(std::uint64_t users, std::uint64_t samples_per_user,
                               std::uint64_t max_value, std::uint64_t seed) {
    return synthetic_values(users, samples_per_user * 3, max_value, seed);
}

UserDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file: " + path);
    UserDataset data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<std::uint64_t> row;
        std::stringstream cells(line);
        std::string cell;
        std::size_t column = 0;
        while (std::getline(cells, cell, ',')) {
            ++column;
            const auto first = cell.find_first_not_of(" \t");
            const auto last = cell.find_last_not_of(" \t");
            const std::string token =
                first == std::string::npos ? std::string() : cell.substr(first, last - first + 1);
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
                throw std::invalid_argument("dataset line " + std::to_string(lineno) +
                                            ", column " + std::to_string(column) + ": '" + cell +
                                            "' is not a non-negative integer");
            row.push_back(v);
        }
        data.rows.push_back(std::move(row));
    }
    if (data.rows.empty()) throw std::invalid_argument("dataset file has no rows: " + path);
    return data;
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::invalid_argument("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational{num, den};
}

KernelReport PipelineResult::total() const {
    KernelReport sum;
    for (const Stage& s : stages) sum += s.report;
    return sum;
}

nlohmann::ordered_json PipelineResult::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "pipeline_v1";
    j["workload"] = workload;
    j["functional"] = functional;
    j["answers"] = nlohmann::ordered_json::array();
    for (const Rational& a : answers)
        j["answers"].push_back({{"num", a.num}, {"den", a.den}, {"value", a.value()}});
    j["stages"] = nlohmann::ordered_json::array();
    for (const Stage& s : stages)
        j["stages"].push_back({{"name", s.name}, {"report", s.report.to_json()}});
    j["total"] = total().to_json();
    j["host_ms"] = host_ms;
    return j;
}

PipelineResult mean_pipeline(const HeParams& params, const KeyPair& keys, const UserDataset& data,
                             const PimConfig& cfg, const WorkloadOptions& opt) {
    require_dataset(data, params);
    const std::size_t len = uniform_length(data);
    const std::uint64_t count = data.rows.size() * len;
    const bool packed = opt.mean_layout == MeanLayout::packed;
    if (packed && static_cast<int>(len) > params.ring->n)
        throw std::invalid_argument("mean: " + std::to_string(len) +
                                    " values per user exceed the " +
                                    std::to_string(params.ring->n) + " coefficient slots");

    if (packed) {
        for (std::size_t j = 0; j < len; ++j) {
            std::uint64_t col = 0;
            for (const auto& row : data.rows) col += row[j];
            if (col > params.t - 1)
                throw OverflowError("mean: column " + std::to_string(j) + " sums to " +
                                    std::to_string(col) + ", above the plaintext bound t - 1 = " +
                                    std::to_string(params.t - 1));
        }
    } else {
        std::uint64_t total_sum = 0;
        for (const auto& row : data.rows)
            for (std::uint64_t v : row) total_sum += v;
        if (total_sum > params.t - 1)
            throw OverflowError("mean: values sum to " + std::to_string(total_sum) +
                                ", above the plaintext bound t - 1 = " +
                                std::to_string(params.t - 1));
    }

    PipelineResult res;
    res.workload = "mean";
    const std::uint64_t items = packed ? data.rows.size() : count;

    if (opt.cost_only) {
        res.functional = false;
        res.stages.push_back({"reduce-sum", detail::reduce_add_estimate(params, items, cfg, 2)});
        res.host_ms = events_to_host_ms(decrypt_events(params, 2));
        res.answers = {oracle_mean(data)};
        return res;
    }

    Encryptor enc{params, keys.pk, opt.enc_seed};
    std::vector<Ciphertext> cts;
    cts.reserve(items);
    for (const auto& row : data.rows) {
        if (packed) {
            cts.push_back(enc.vector(row));
        } else {
            for (std::uint64_t v : row) cts.push_back(enc.scalar(v));
        }
    }

    auto [sum_ct, rep] = run_reduce_add_kernel(params, cts, cfg);
    res.stages.push_back({"reduce-sum", rep});

    InstrCounter host;
    Plaintext pt;
    {
        CountScope scope(host);
        pt = decrypt(params, keys.sk, sum_ct);
    }
    std::uint64_t total_sum = 0;
    if (packed) {
        for (std::uint64_t s : decode_vector(params, pt, len)) total_sum += s;
    } else {
        total_sum = decode_scalar(params, pt);
    }
    res.answers = {Rational::make(static_cast<std::int64_t>(total_sum),
                                  static_cast<std::int64_t>(count))};
    res.host_ms = events_to_host_ms(host.total_events());
    return res;
}

PipelineResult variance_pipeline(const HeParams& params, const KeyPair& keys,
                                 const UserDataset& data, const PimConfig& cfg,
                                 const WorkloadOptions& opt) {
    require_dataset(data, params);
    const std::size_t len = uniform_length(data);
    const std::uint64_t count = data.rows.size() * len;

    std::uint64_t s1 = 0, s2 = 0;
    for (const auto& row : data.rows) {
        for (std::uint64_t v : row) {
            s1 += v;
            s2 += v * v;
        }
    }
    if (s2 > params.t - 1)
        throw OverflowError("variance: squares sum to " + std::to_string(s2) +
                            ", above the plaintext bound t - 1 = " + std::to_string(params.t - 1));
    if (s1 > params.t - 1)
        throw OverflowError("variance: values sum to " + std::to_string(s1) +
                            ", above the plaintext bound t - 1 = " + std::to_string(params.t - 1));

    PipelineResult res;
    res.workload = "variance";

    if (opt.cost_only) {
        res.functional = false;
        const int n = params.ring->n;
        const int w = params.ring->coeff_width;
        const std::uint64_t size2 = ciphertext_byte_size(params, 2);
        const std::uint64_t size3 = ciphertext_byte_size(params, 3);
        res.stages.push_back({"square", detail::pairwise_estimate(count, cfg,
                                                                  cost::he_mul_item(n, w),
                                                                  2 * size2, size3)});
        res.stages.push_back(
            {"reduce-squares", detail::reduce_add_estimate(params, count, cfg, 3)});
        res.stages.push_back({"reduce-values", detail::reduce_add_estimate(params, count, cfg, 2)});
        res.host_ms =
            events_to_host_ms(decrypt_events(params, 3) + decrypt_events(params, 2));
        res.answers = {oracle_variance(data)};
        return res;
    }

    Encryptor enc{params, keys.pk, opt.enc_seed};
    std::vector<Ciphertext> value_cts;
    value_cts.reserve(count);
    for (const auto& row : data.rows)
        for (std::uint64_t v : row) value_cts.push_back(enc.scalar(v));

    auto [squares, rep_mul] = run_vector_mul_kernel(params, value_cts, value_cts, cfg);
    res.stages.push_back({"square", rep_mul});
    auto [s2_ct, rep_s2] = run_reduce_add_kernel(params, squares, cfg);
    res.stages.push_back({"reduce-squares", rep_s2});
    auto [s1_ct, rep_s1] = run_reduce_add_kernel(params, value_cts, cfg);
    res.stages.push_back({"reduce-values", rep_s1});

    InstrCounter host;
    std::uint64_t dec_s2 = 0, dec_s1 = 0;
    {
        CountScope scope(host);
        dec_s2 = decode_scalar(params, decrypt(params, keys.sk, s2_ct));
        dec_s1 = decode_scalar(params, decrypt(params, keys.sk, s1_ct));
    }
    const std::int64_t n64 = static_cast<std::int64_t>(count);
    res.answers = {Rational::make(n64 * static_cast<std::int64_t>(dec_s2) -
                                      static_cast<std::int64_t>(dec_s1 * dec_s1),
                                  n64 * n64)};
    res.host_ms = events_to_host_ms(host.total_events());
    return res;
}

PipelineResult linreg_pipeline(const HeParams& params, const KeyPair& keys,
                               const UserDataset& data, const RegressionModel& model,
                               const PimConfig& cfg, const WorkloadOptions& opt) {
    require_dataset(data, params);
    const std::size_t len = uniform_length(data);
    const std::size_t features = model.weights.size();
    if (features != 3 && !opt.allow_general_features)
        throw std::invalid_argument("linear regression expects 3 features (got " +
                                    std::to_string(features) + ")");
    if (features == 0) throw std::invalid_argument("linear regression needs at least one weight");
    if (len % features != 0)
        throw std::invalid_argument("dataset rows hold " + std::to_string(len) +
                                    " values, not divisible into " + std::to_string(features) +
                                    "-feature samples");
    for (std::size_t k = 0; k < features; ++k)
        if (model.weights[k] >= params.t)
            throw std::invalid_argument("weight " + std::to_string(k) + " is not below t");
    if (model.bias >= params.t) throw std::invalid_argument("bias is not below t");

    const std::uint64_t samples = len / features;
    const std::uint64_t items = data.rows.size() * samples;

    PipelineResult res;
    res.workload = "linreg";

    if (opt.cost_only) {
        res.functional = false;
        const int n = params.ring->n;
        const int w = params.ring->coeff_width;
        const std::uint64_t size2 = ciphertext_byte_size(params, 2);
        const std::uint64_t size3 = ciphertext_byte_size(params, 3);
        for (std::size_t k = 0; k < features; ++k) {
            res.stages.push_back({"mul-feature-" + std::to_string(k),
                                  detail::pairwise_estimate(items, cfg, cost::he_mul_item(n, w),
                                                            2 * size2, size3)});
            if (k > 0)
                res.stages.push_back(
                    {"add-partials-" + std::to_string(k),
                     detail::pairwise_estimate(items, cfg, cost::he_add_item(n, w, 3, 3),
                                               2 * size3, size3)});
        }
        res.stages.push_back({"add-bias",
                              detail::pairwise_estimate(items, cfg, cost::he_add_item(n, w, 3, 2),
                                                        size3 + size2, size3)});
        res.host_ms = events_to_host_ms(items * decrypt_events(params, 3));
        res.answers.reserve(items);
        for (std::uint64_t p : oracle_linreg(data, model, params.t))
            res.answers.push_back(Rational{static_cast<std::int64_t>(p), 1});
        return res;
    }

    Encryptor enc{params, keys.pk, opt.enc_seed};
    std::vector<Ciphertext> weight_cts;
    for (std::size_t k = 0; k < features; ++k)
        weight_cts.push_back(opt.weight_mode == WeightMode::encrypted
                                 ? enc.scalar(model.weights[k])
                                 : trivial_encryption(params, model.weights[k]));
    Ciphertext bias_ct = opt.weight_mode == WeightMode::encrypted
                             ? enc.scalar(model.bias)
                             : trivial_encryption(params, model.bias);

    std::vector<std::vector<Ciphertext>> feature_cts(features);
    for (auto& f : feature_cts) f.reserve(items);
    for (const auto& row : data.rows)
        for (std::uint64_t s = 0; s < samples; ++s)
            for (std::size_t k = 0; k < features; ++k)
                feature_cts[k].push_back(enc.scalar(row[s * features + k]));

    std::vector<Ciphertext> acc;
    for (std::size_t k = 0; k < features; ++k) {
        std::vector<Ciphertext> broadcast(items, weight_cts[k]);
        auto [prods, rep] = run_vector_mul_kernel(params, broadcast, feature_cts[k], cfg);
        res.stages.push_back({"mul-feature-" + std::to_string(k), rep});
        if (k == 0) {
            acc = std::move(prods);
        } else {
            auto [sums, rep_add] = run_vector_add_kernel(params, acc, prods, cfg);
            res.stages.push_back({"add-partials-" + std::to_string(k), rep_add});
            acc = std::move(sums);
        }
    }
    {
        std::vector<Ciphertext> broadcast(items, bias_ct);
        auto [sums, rep_bias] = run_vector_add_kernel(params, acc, broadcast, cfg);
        res.stages.push_back({"add-bias", rep_bias});
        acc = std::move(sums);
    }

    InstrCounter host;
    {
        CountScope scope(host);
        res.answers.reserve(items);
        for (const Ciphertext& ct : acc)
            res.answers.push_back(Rational{
                static_cast<std::int64_t>(decode_scalar(params, decrypt(params, keys.sk, ct))),
                1});
    }
    res.host_ms = events_to_host_ms(host.total_events());
    return res;
}

Rational oracle_mean(const UserDataset& data) {
    if (data.rows.empty()) throw std::invalid_argument("dataset needs at least one user");
    std::uint64_t sum = 0, count = 0;
    for (const auto& row : data.rows) {
        for (std::uint64_t v : row) sum += v;
        count += row.size();
    }
    if (count == 0) throw std::invalid_argument("dataset has no values");
    return Rational::make(static_cast<std::int64_t>(sum), static_cast<std::int64_t>(count));
}

Rational oracle_variance(const UserDataset& data) {
    if (data.rows.empty()) throw std::invalid_argument("dataset needs at least one user");
    std::uint64_t s1 = 0, s2 = 0, count = 0;
    for (const auto& row : data.rows) {
        for (std::uint64_t v : row) {
            s1 += v;
            s2 += v * v;
        }
        count += row.size();
    }
    if (count == 0) throw std::invalid_argument("dataset has no values");
    const std::int64_t n64 = static_cast<std::int64_t>(count);
    return Rational::make(n64 * static_cast<std::int64_t>(s2) -
                              static_cast<std::int64_t>(s1 * s1),
                          n64 * n64);
}

std::vector<std::uint64_t> oracle_linreg(const UserDataset& data, const RegressionModel& model,
                                         std::uint64_t t) {
    if (data.rows.empty()) throw std::invalid_argument("dataset needs at least one user");
    const std::size_t features = model.weights.size();
    if (features == 0) throw std::invalid_argument("linear regression needs at least one weight");
    std::vector<std::uint64_t> out;
    for (const auto& row : data.rows) {
        if (row.size() % features != 0)
            throw std::invalid_argument("dataset rows are not divisible into samples");
        for (std::size_t s = 0; s < row.size() / features; ++s) {
            std::uint64_t acc = model.bias % t;
            for (std::size_t k = 0; k < features; ++k)
                acc = (acc + (model.weights[k] % t) * (row[s * features + k] % t)) % t;
            out.push_back(acc);
        }
    }
    return out;
}

} // namespace pimhe
