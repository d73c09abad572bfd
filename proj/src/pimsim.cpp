#include "pimhe/pimsim.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <stdexcept>

#include "pimhe/serialize.hpp"

namespace pimhe {

namespace {

int ceil_log2(std::uint64_t x) {
    int bits = 0;
    while ((std::uint64_t{1} << bits) < x) ++bits;
    return bits;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

Ciphertext zero_ciphertext(const HeParams& params) {
    Ciphertext ct;
    ct.comps.push_back(zero_poly(params.ring));
    ct.comps.push_back(zero_poly(params.ring));
    ct.mul_count = 0;
    return ct;
}

double cycles_to_ms(std::uint64_t cycles, const PimConfig& cfg) {
    return static_cast<double>(cycles) / (static_cast<double>(cfg.clock_mhz) * 1e3);
}

template <typename Op>
std::pair<std::vector<Ciphertext>, KernelReport>
run_pairwise(const HeParams& params, const std::vector<Ciphertext>& lhs,
             const std::vector<Ciphertext>& rhs, const PimConfig& cfg, Op op) {
    cfg.validate();
    if (lhs.size() != rhs.size())
        throw std::invalid_argument("kernel operand vectors differ in length");

    const std::uint64_t items = lhs.size();
    KernelReport rep;
    rep.tasklets_used = cfg.tasklets;
    if (items == 0) return {std::vector<Ciphertext>{}, rep};

    const int cores = static_cast<int>(std::min<std::uint64_t>(items, cfg.num_cores));
    std::vector<Ciphertext> results(items);
    std::vector<InstrCounter> item_instr(items);
    std::vector<std::exception_ptr> errors(items);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(items); ++i) {
        try {
            CountScope scope(item_instr[i]);
            results[i] = op(lhs[i], rhs[i]);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (std::uint64_t i = 0; i < items; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);

    // Deterministic core-order reduction of the measured counters.
    std::vector<InstrCounter> per_core(cores);
    for (std::uint64_t i = 0; i < items; ++i) {
        per_core[i % cores] += item_instr[i];
        rep.instr += item_instr[i];
    }
    for (int c = 0; c < cores; ++c)
        rep.cycles_per_core =
            std::max(rep.cycles_per_core, estimate_cycles(per_core[c], cfg.tasklets, cfg));
    rep.elapsed_ms = cycles_to_ms(rep.cycles_per_core, cfg);
    rep.cores_used = cores;

    for (std::uint64_t i = 0; i < items; ++i) {
        rep.bytes_to_pim += ciphertext_byte_size(params, static_cast<int>(lhs[i].comps.size()));
        rep.bytes_to_pim += ciphertext_byte_size(params, static_cast<int>(rhs[i].comps.size()));
        rep.bytes_from_pim +=
            ciphertext_byte_size(params, static_cast<int>(results[i].comps.size()));
    }
    rep.transfer_ms = transfer_time_ms(rep.bytes_to_pim + rep.bytes_from_pim, cfg);
    return {std::move(results), rep};
}

} // namespace

void PimConfig::validate() const {
    if (num_cores < 1) throw std::invalid_argument("num_cores must be positive");
    if (clock_mhz < 1) throw std::invalid_argument("clock_mhz must be positive");
    if (tasklets < 1) throw std::invalid_argument("tasklets must be at least 1");
    if (saturation_threads < 1) throw std::invalid_argument("saturation_threads must be at least 1");
    if (per_core_mem_bytes == 0) throw std::invalid_argument("per_core_mem_bytes must be positive");
    if (!(host_link_gbps > 0.0)) throw std::invalid_argument("host_link_gbps must be positive");
}

nlohmann::ordered_json PimConfig::to_json() const {
    nlohmann::ordered_json j;
    j["num_cores"] = num_cores;
    j["clock_mhz"] = clock_mhz;
    j["tasklets"] = tasklets;
    j["saturation_threads"] = saturation_threads;
    j["per_core_mem_bytes"] = per_core_mem_bytes;
    j["host_link_gbps"] = host_link_gbps;
    j["cost"] = {{"add", cost.add},       {"addc", cost.addc},
                 {"load", cost.load},     {"store", cost.store},
                 {"mul32", cost.mul32},   {"loop_overhead", cost.loop_overhead}};
    return j;
}

PimConfig PimConfig::from_json(const nlohmann::json& j) {
    PimConfig cfg;
    if (!j.is_object()) throw std::invalid_argument("PIM config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "num_cores") cfg.num_cores = value.get<int>();
        else if (key == "clock_mhz") cfg.clock_mhz = value.get<int>();
        else if (key == "tasklets") cfg.tasklets = value.get<int>();
        else if (key == "saturation_threads") cfg.saturation_threads = value.get<int>();
        else if (key == "per_core_mem_bytes") cfg.per_core_mem_bytes = value.get<std::uint64_t>();
        else if (key == "host_link_gbps") cfg.host_link_gbps = value.get<double>();
        else if (key == "cost") {
            if (!value.is_object()) throw std::invalid_argument("cost must be a JSON object");
            for (const auto& [ck, cv] : value.items()) {
                if (ck == "add") cfg.cost.add = cv.get<std::uint64_t>();
                else if (ck == "addc") cfg.cost.addc = cv.get<std::uint64_t>();
                else if (ck == "load") cfg.cost.load = cv.get<std::uint64_t>();
                else if (ck == "store") cfg.cost.store = cv.get<std::uint64_t>();
                else if (ck == "mul32") cfg.cost.mul32 = cv.get<std::uint64_t>();
                else if (ck == "loop_overhead") cfg.cost.loop_overhead = cv.get<std::uint64_t>();
                else throw std::invalid_argument("unknown cost table key: " + ck);
            }
        } else {
            throw std::invalid_argument("unknown PIM config key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

PimConfig PimConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open PIM config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("cannot parse PIM config file " + path + ": " + e.what());
    }
    return from_json(j);
}

KernelReport& KernelReport::operator+=(const KernelReport& o) {
    instr += o.instr;
    cycles_per_core += o.cycles_per_core;
    elapsed_ms += o.elapsed_ms;
    bytes_to_pim += o.bytes_to_pim;
    bytes_from_pim += o.bytes_from_pim;
    transfer_ms += o.transfer_ms;
    cores_used = std::max(cores_used, o.cores_used);
    tasklets_used = std::max(tasklets_used, o.tasklets_used);
    return *this;
}

nlohmann::ordered_json KernelReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "report_v1";
    j["cycles_per_core"] = cycles_per_core;
    j["elapsed_ms"] = elapsed_ms;
    j["transfer_ms"] = transfer_ms;
    j["bytes_to_pim"] = bytes_to_pim;
    j["bytes_from_pim"] = bytes_from_pim;
    j["cores_used"] = cores_used;
    j["tasklets_used"] = tasklets_used;
    j["instr"] = {{"adds", instr.adds},   {"addcs", instr.addcs},
                  {"muls32", instr.muls32}, {"loads", instr.loads},
                  {"stores", instr.stores}, {"loop_overhead", instr.loop_overhead}};
    return j;
}

std::vector<int> partition(std::uint64_t num_items, const PimConfig& cfg) {
    cfg.validate();
    std::vector<int> assign(num_items);
    if (num_items == 0) return assign;
    const int cores = static_cast<int>(std::min<std::uint64_t>(num_items, cfg.num_cores));
    for (std::uint64_t i = 0; i < num_items; ++i)
        assign[i] = static_cast<int>(i % cores);
    return assign;
}

std::uint64_t weighted_cycles(const InstrCounter& instr, const CostTable& cost) {
    return instr.adds * cost.add + instr.addcs * cost.addc + instr.muls32 * cost.mul32 +
           instr.loads * cost.load + instr.stores * cost.store +
           instr.loop_overhead * cost.loop_overhead;
}

std::uint64_t estimate_cycles(const InstrCounter& per_core_stream, int tasklets,
                              const PimConfig& cfg) {
    if (tasklets < 1) throw std::invalid_argument("tasklets must be at least 1");
    const std::uint64_t weighted = weighted_cycles(per_core_stream, cfg.cost);
    const std::uint64_t s = static_cast<std::uint64_t>(cfg.saturation_threads);
    const std::uint64_t active = std::min<std::uint64_t>(tasklets, s);
    return ceil_div(weighted * s, active);
}

double transfer_time_ms(std::uint64_t bytes, const PimConfig& cfg) {
    return static_cast<double>(bytes) * 8.0 / (cfg.host_link_gbps * 1e9) * 1e3;
}

std::pair<std::vector<Ciphertext>, KernelReport>
run_vector_add_kernel(const HeParams& params, const std::vector<Ciphertext>& lhs,
                      const std::vector<Ciphertext>& rhs, const PimConfig& cfg) {
    return run_pairwise(params, lhs, rhs, cfg, [&params](const Ciphertext& a, const Ciphertext& b) {
        return he_add(params, a, b);
    });
}

std::pair<std::vector<Ciphertext>, KernelReport>
run_vector_mul_kernel(const HeParams& params, const std::vector<Ciphertext>& lhs,
                      const std::vector<Ciphertext>& rhs, const PimConfig& cfg, MulMode mode) {
    if (mode == MulMode::he)
        return run_pairwise(params, lhs, rhs, cfg,
                            [&params](const Ciphertext& a, const Ciphertext& b) {
                                return he_mul(params, a, b);
                            });
    return run_pairwise(params, lhs, rhs, cfg, [](const Ciphertext& a, const Ciphertext& b) {
        std::size_t m = std::min(a.comps.size(), b.comps.size());
        Ciphertext out;
        for (std::size_t j = 0; j < m; ++j)
            out.comps.push_back(poly_negacyclic_mul(a.comps[j], b.comps[j]));
        out.mul_count = 0;
        return out;
    });
}

std::pair<Ciphertext, KernelReport>
run_reduce_add_kernel(const HeParams& params, const std::vector<Ciphertext>& items,
                      const PimConfig& cfg) {
    cfg.validate();
    if (items.empty()) throw std::invalid_argument("reduce kernel needs at least one item");

    KernelReport rep;
    rep.tasklets_used = cfg.tasklets;
    for (const Ciphertext& ct : items)
        rep.bytes_to_pim += ciphertext_byte_size(params, static_cast<int>(ct.comps.size()));

    std::vector<Ciphertext> current = items;
    int levels = 0;
    while (current.size() > 1) {
        std::vector<Ciphertext> lhs, rhs;
        for (std::size_t i = 0; i + 1 < current.size(); i += 2) {
            lhs.push_back(std::move(current[i]));
            rhs.push_back(std::move(current[i + 1]));
        }
        bool carry = current.size() % 2 != 0;
        Ciphertext leftover;
        if (carry) leftover = std::move(current.back());

        auto [sums, level_rep] = run_vector_add_kernel(params, lhs, rhs, cfg);
        rep.instr += level_rep.instr;
        rep.cycles_per_core += level_rep.cycles_per_core;
        rep.cores_used = std::max(rep.cores_used, level_rep.cores_used);

        current = std::move(sums);
        if (carry) current.push_back(std::move(leftover));
        ++levels;
    }

    // Zero-padded levels pin the tree depth to the device's reduction
    // network, keeping the critical path independent of the item count.
    const int target_levels = ceil_log2(static_cast<std::uint64_t>(cfg.num_cores));
    const std::vector<Ciphertext> zero = {zero_ciphertext(params)};
    while (levels < target_levels) {
        auto [sums, level_rep] = run_vector_add_kernel(params, {current[0]}, zero, cfg);
        rep.instr += level_rep.instr;
        rep.cycles_per_core += level_rep.cycles_per_core;
        rep.cores_used = std::max(rep.cores_used, level_rep.cores_used);
        current[0] = std::move(sums[0]);
        ++levels;
    }

    rep.elapsed_ms = cycles_to_ms(rep.cycles_per_core, cfg);
    rep.bytes_from_pim = ciphertext_byte_size(params, static_cast<int>(current[0].comps.size()));
    rep.transfer_ms = transfer_time_ms(rep.bytes_to_pim + rep.bytes_from_pim, cfg);
    return {std::move(current[0]), rep};
}

namespace detail {

KernelReport pairwise_estimate(std::uint64_t num_items, const PimConfig& cfg,
                               const InstrCounter& per_item, std::uint64_t in_bytes,
                               std::uint64_t out_bytes) {
    cfg.validate();
    KernelReport rep;
    rep.tasklets_used = cfg.tasklets;
    if (num_items == 0) return rep;

    const std::uint64_t cores = std::min<std::uint64_t>(num_items, cfg.num_cores);
    InstrCounter per_core;
    per_core.add_scaled(per_item, ceil_div(num_items, cores));
    rep.cycles_per_core = estimate_cycles(per_core, cfg.tasklets, cfg);
    rep.elapsed_ms = cycles_to_ms(rep.cycles_per_core, cfg);
    rep.instr.add_scaled(per_item, num_items);
    rep.cores_used = static_cast<int>(cores);
    rep.bytes_to_pim = num_items * in_bytes;
    rep.bytes_from_pim = num_items * out_bytes;
    rep.transfer_ms = transfer_time_ms(rep.bytes_to_pim + rep.bytes_from_pim, cfg);
    return rep;
}

KernelReport reduce_add_estimate(const HeParams& params, std::uint64_t num_items,
                                 const PimConfig& cfg, int comps) {
    cfg.validate();
    if (num_items == 0) throw std::invalid_argument("reduce kernel needs at least one item");

    const int n = params.ring->n;
    const int w = params.ring->coeff_width;
    const InstrCounter per_add = cost::he_add_item(n, w, comps, comps);
    const std::uint64_t size = ciphertext_byte_size(params, comps);

    KernelReport rep;
    rep.tasklets_used = cfg.tasklets;
    std::uint64_t count = num_items;
    int levels = 0;
    while (count > 1) {
        const std::uint64_t pairs = count / 2;
        const std::uint64_t cores = std::min<std::uint64_t>(pairs, cfg.num_cores);
        InstrCounter per_core;
        per_core.add_scaled(per_add, ceil_div(pairs, cores));
        rep.cycles_per_core += estimate_cycles(per_core, cfg.tasklets, cfg);
        rep.instr.add_scaled(per_add, pairs);
        rep.cores_used = std::max(rep.cores_used, static_cast<int>(cores));
        count -= pairs;
        ++levels;
    }
    const int target_levels = ceil_log2(static_cast<std::uint64_t>(cfg.num_cores));
    while (levels < target_levels) {
        rep.cycles_per_core += estimate_cycles(per_add, cfg.tasklets, cfg);
        rep.instr += per_add;
        rep.cores_used = std::max(rep.cores_used, 1);
        ++levels;
    }
    rep.elapsed_ms = cycles_to_ms(rep.cycles_per_core, cfg);
    rep.bytes_to_pim = num_items * size;
    rep.bytes_from_pim = size;
    rep.transfer_ms = transfer_time_ms(rep.bytes_to_pim + rep.bytes_from_pim, cfg);
    return rep;
}

} // namespace detail

KernelReport cost_only_estimate(KernelKind kind, std::uint64_t num_items, const HeParams& params,
                                const PimConfig& cfg) {
    const int n = params.ring->n;
    const int w = params.ring->coeff_width;
    const std::uint64_t size2 = ciphertext_byte_size(params, 2);
    const std::uint64_t size3 = ciphertext_byte_size(params, 3);

    switch (kind) {
        case KernelKind::vector_add:
            return detail::pairwise_estimate(num_items, cfg, cost::he_add_item(n, w, 2, 2),
                                             2 * size2, size2);
        case KernelKind::vector_mul:
            return detail::pairwise_estimate(num_items, cfg, cost::he_mul_item(n, w), 2 * size2,
                                             size3);
        case KernelKind::raw_mul:
            return detail::pairwise_estimate(num_items, cfg, cost::raw_mul_item(n, w, 2),
                                             2 * size2, size2);
        case KernelKind::reduce_add:
            return detail::reduce_add_estimate(params, num_items, cfg, 2);
        default:
            throw std::invalid_argument("unknown kernel kind");
    }
}

std::vector<Ciphertext> reference_vector_add(const HeParams& params,
                                             const std::vector<Ciphertext>& lhs,
                                             const std::vector<Ciphertext>& rhs) {
    if (lhs.size() != rhs.size())
        throw std::invalid_argument("kernel operand vectors differ in length");
    std::vector<Ciphertext> out;
    out.reserve(lhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) out.push_back(he_add(params, lhs[i], rhs[i]));
    return out;
}

std::vector<Ciphertext> reference_vector_mul(const HeParams& params,
                                             const std::vector<Ciphertext>& lhs,
                                             const std::vector<Ciphertext>& rhs, MulMode mode) {
    if (lhs.size() != rhs.size())
        throw std::invalid_argument("kernel operand vectors differ in length");
    std::vector<Ciphertext> out;
    out.reserve(lhs.size());
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        if (mode == MulMode::he) {
            out.push_back(he_mul(params, lhs[i], rhs[i]));
        } else {
            std::size_t m = std::min(lhs[i].comps.size(), rhs[i].comps.size());
            Ciphertext ct;
            for (std::size_t j = 0; j < m; ++j)
                ct.comps.push_back(poly_negacyclic_mul(lhs[i].comps[j], rhs[i].comps[j]));
            ct.mul_count = 0;
            out.push_back(std::move(ct));
        }
    }
    return out;
}

Ciphertext reference_reduce_add(const HeParams& params, const std::vector<Ciphertext>& items) {
    if (items.empty()) throw std::invalid_argument("reduce kernel needs at least one item");
    Ciphertext acc = items[0];
    for (std::size_t i = 1; i < items.size(); ++i) acc = he_add(params, acc, items[i]);
    return acc;
}

} // namespace pimhe
