#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "pimhe/pimsim.hpp"
#include "pimhe/workloads.hpp"

namespace pimhe::bench {

enum class Mode {
    microbench_add,
    microbench_mul,
    workload_mean,
    workload_variance,
    workload_linreg
};

enum class Format { csv, json };

std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

// A functional run whose results disagree with the host reference.  Nothing
// is emitted when this fires; the CLI maps it to exit code 3.
class OracleMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BenchSpec {
    Mode mode = Mode::microbench_add;
    int security = 27;
    std::vector<std::uint64_t> items; // microbench sweep; empty = built-in sweep
    std::uint64_t users = 64;
    std::uint64_t cts_per_user = 1;
    std::uint64_t seed = 1;
    bool cost_only = false;
    PimConfig pim;
    Format format = Format::csv;

    void validate() const; // throws invalid_argument naming the field
};

// Functional runs above these sizes fall back to cost-only estimation
// (per row, recorded in the output).
inline constexpr std::uint64_t kFunctionalAddCap = 4096;
inline constexpr std::uint64_t kFunctionalMulCap = 256;

struct ReportMeta {
    std::string mode;
    std::string version;
    int security = 0;
    int n = 0;
    int coeff_width = 0;
    std::uint64_t t = 0;
    std::uint64_t seed = 0;
    PimConfig pim;
};

struct MicrobenchRow {
    std::uint64_t items = 0;
    bool functional = false;
    KernelReport report;
};

struct MicrobenchResult {
    ReportMeta meta;
    std::vector<MicrobenchRow> rows;
    bool any_estimated = false; // some requested functional rows were routed to cost-only
};

struct WorkloadResult {
    ReportMeta meta;
    std::uint64_t users = 0;
    std::uint64_t cts_per_user = 0;
    PipelineResult pipeline;
    bool estimated = false;
};

MicrobenchResult run_microbench(const BenchSpec& spec);
WorkloadResult run_workload(const BenchSpec& spec);

// Deterministic bytes for identical inputs; every report embeds the full
// parameter set, seed, cost table, and artifact version.
void emit_report(std::ostream& out, const MicrobenchResult& result, Format format);
void emit_report(std::ostream& out, const WorkloadResult& result, Format format);

// Plaintext modulus used for a workload at a security level (the mean
// pipeline needs sum range rather than multiplication headroom).
std::uint64_t workload_t_override(Mode mode, int security);

// Full command-line front end.  Exit codes: 0 success, 2 usage,
// 3 oracle mismatch, 4 overflow or depth error.
int run_cli(int argc, const char* const* argv);

} // namespace pimhe::bench
