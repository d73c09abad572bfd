#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pimhe/bfv.hpp"
#include "pimhe/instr.hpp"

namespace pimhe {

// Cycles charged per instruction class.  mul32 is expensive because the
// modeled cores have no native 32-bit multiplier and run a shift-and-add
// software loop instead.
struct CostTable {
    std::uint64_t add = 1;
    std::uint64_t addc = 1;
    std::uint64_t load = 1;
    std::uint64_t store = 1;
    std::uint64_t mul32 = 96;
    std::uint64_t loop_overhead = 2;
};

struct PimConfig {
    int num_cores = 2524;
    int clock_mhz = 425;
    int tasklets = 16;
    int saturation_threads = 11;
    CostTable cost;
    std::uint64_t per_core_mem_bytes = 64ull << 20;
    double host_link_gbps = 8.0;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    // Accepts a partial document: present keys override defaults, unknown
    // keys are rejected by name.
    static PimConfig from_json(const nlohmann::json& j);
    static PimConfig from_json_file(const std::string& path);
};

struct KernelReport {
    InstrCounter instr;
    std::uint64_t cycles_per_core = 0;
    double elapsed_ms = 0.0;
    std::uint64_t bytes_to_pim = 0;
    std::uint64_t bytes_from_pim = 0;
    double transfer_ms = 0.0;
    int cores_used = 0;
    int tasklets_used = 0;

    // Stage composition: counts, cycles, bytes and times add; core and
    // tasklet usage take the maximum over stages.
    KernelReport& operator+=(const KernelReport& o);
    nlohmann::ordered_json to_json() const;
};

// Work-item to core assignment, round-robin over min(items, cores).
std::vector<int> partition(std::uint64_t num_items, const PimConfig& cfg);

std::uint64_t weighted_cycles(const InstrCounter& instr, const CostTable& cost);

// Per-core cycle estimate for one core's whole instruction stream: the
// pipeline retires one instruction per cycle once saturation_threads tasklets
// keep it full, and proportionally less below that (rounded up).
std::uint64_t estimate_cycles(const InstrCounter& per_core_stream, int tasklets,
                              const PimConfig& cfg);

double transfer_time_ms(std::uint64_t bytes, const PimConfig& cfg);

enum class MulMode { he, raw };

enum class KernelKind { vector_add, vector_mul, raw_mul, reduce_add };

std::pair<std::vector<Ciphertext>, KernelReport>
run_vector_add_kernel(const HeParams& params, const std::vector<Ciphertext>& lhs,
                      const std::vector<Ciphertext>& rhs, const PimConfig& cfg);

std::pair<std::vector<Ciphertext>, KernelReport>
run_vector_mul_kernel(const HeParams& params, const std::vector<Ciphertext>& lhs,
                      const std::vector<Ciphertext>& rhs, const PimConfig& cfg,
                      MulMode mode = MulMode::he);

// Sums all items into one ciphertext with a fixed-depth pairwise tree: levels
// halve the item count, then zero-padded levels keep the total depth at
// ceil(log2(num_cores)) so the critical path does not depend on how many
// items actually arrived (as long as pairs fit the cores).  Operands cross
// the host link once; intermediate levels stay on the device.
std::pair<Ciphertext, KernelReport>
run_reduce_add_kernel(const HeParams& params, const std::vector<Ciphertext>& items,
                      const PimConfig& cfg);

// Analytic twin of the runners: identical instruction counts and cycle
// numbers without materializing any data (items are assumed fresh
// 2-component ciphertexts).
KernelReport cost_only_estimate(KernelKind kind, std::uint64_t num_items, const HeParams& params,
                                const PimConfig& cfg);

// Host-side serial references for transparency checks.
std::vector<Ciphertext> reference_vector_add(const HeParams& params,
                                             const std::vector<Ciphertext>& lhs,
                                             const std::vector<Ciphertext>& rhs);
std::vector<Ciphertext> reference_vector_mul(const HeParams& params,
                                             const std::vector<Ciphertext>& lhs,
                                             const std::vector<Ciphertext>& rhs,
                                             MulMode mode = MulMode::he);
Ciphertext reference_reduce_add(const HeParams& params, const std::vector<Ciphertext>& items);

namespace detail {

// Estimate for one batched element-wise kernel dispatch: `per_item` is the
// instruction cost of one item, `in_bytes`/`out_bytes` its per-item link
// traffic.  Mirrors the measured runner exactly (same ceil points).
KernelReport pairwise_estimate(std::uint64_t num_items, const PimConfig& cfg,
                               const InstrCounter& per_item, std::uint64_t in_bytes,
                               std::uint64_t out_bytes);

// Estimate for the fixed-depth reduction tree over items of `comps`
// components each.
KernelReport reduce_add_estimate(const HeParams& params, std::uint64_t num_items,
                                 const PimConfig& cfg, int comps);

} // namespace detail

} // namespace pimhe
