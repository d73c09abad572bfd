#include "pimhe/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pimhe/prng.hpp"
#include "pimhe/serialize.hpp"

namespace pimhe::bench {

namespace {

constexpr const char* kVersion = "1.0.0";

// Seed lineage tags: one root seed drives keys, data and encryption noise
// through disjoint streams so reruns reproduce every byte.
constexpr std::uint64_t kKeySalt = 0x6B657973ull;
constexpr std::uint64_t kDataSalt = 0x64617461ull;
constexpr std::uint64_t kEncSalt = 0x656E6372ull;
constexpr std::uint64_t kModelSalt = 0x9E3779B97F4A7C15ull;

const std::vector<std::uint64_t>& default_sweep(Mode mode) {
    static const std::vector<std::uint64_t> add = {20480, 40960, 81920, 163840, 327680};
    static const std::vector<std::uint64_t> mul = {5120, 10240, 20480, 40960, 81920};
    return mode == Mode::microbench_mul ? mul : add;
}

bool is_microbench(Mode mode) {
    return mode == Mode::microbench_add || mode == Mode::microbench_mul;
}

bool same_ciphertext(const Ciphertext& a, const Ciphertext& b) {
    if (a.comps.size() != b.comps.size() || a.mul_count != b.mul_count) return false;
    for (std::size_t i = 0; i < a.comps.size(); ++i)
        if (!(a.comps[i] == b.comps[i])) return false;
    return true;
}

std::uint64_t isqrt_u64(std::uint64_t v) {
    std::uint64_t r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(v)));
    while (r > 0 && r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

ReportMeta make_meta(const BenchSpec& spec, const HeParams& params) {
    ReportMeta meta;
    meta.mode = mode_name(spec.mode);
    meta.version = kVersion;
    meta.security = params.security_bits;
    meta.n = params.ring->n;
    meta.coeff_width = params.ring->coeff_width;
    meta.t = params.t;
    meta.seed = spec.seed;
    meta.pim = spec.pim;
    return meta;
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// One functional microbench row: encrypt a bounded operand pool, tile it
// across the batch, run the device kernel, then insist the results match
// the serial host reference bit for bit and decrypt to the right scalars.
KernelReport functional_row(const HeParams& params, const KeyPair& keys, std::uint64_t count,
                            bool is_mul, const BenchSpec& spec) {
    const std::size_t pool = static_cast<std::size_t>(std::min<std::uint64_t>(count, 256));
    Prng rng(Prng(spec.seed ^ kDataSalt).child(count).next());
    std::vector<std::uint64_t> va(pool), vb(pool);
    std::vector<Ciphertext> ca, cb;
    ca.reserve(pool);
    cb.reserve(pool);
    const std::uint64_t enc_base = Prng(spec.seed ^ kEncSalt).child(count).next();
    for (std::size_t i = 0; i < pool; ++i) {
        va[i] = rng.below(params.t);
        vb[i] = rng.below(params.t);
        ca.push_back(encrypt(params, keys.pk, encode_scalar(params, va[i]), enc_base + 2 * i));
        cb.push_back(encrypt(params, keys.pk, encode_scalar(params, vb[i]), enc_base + 2 * i + 1));
    }
    std::vector<Ciphertext> lhs, rhs;
    lhs.reserve(count);
    rhs.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        lhs.push_back(ca[i % pool]);
        rhs.push_back(cb[i % pool]);
    }

    auto [results, report] = is_mul ? run_vector_mul_kernel(params, lhs, rhs, spec.pim)
                                    : run_vector_add_kernel(params, lhs, rhs, spec.pim);
    const std::vector<Ciphertext> expect = is_mul ? reference_vector_mul(params, lhs, rhs)
                                                  : reference_vector_add(params, lhs, rhs);
    for (std::uint64_t i = 0; i < count; ++i)
        if (!same_ciphertext(results[i], expect[i]))
            throw OracleMismatch(mode_name(spec.mode) + ": device result differs from the host reference at item " +
                                 std::to_string(i) + " of " + std::to_string(count));
    const std::uint64_t spot = std::min<std::uint64_t>(count, 8);
    for (std::uint64_t i = 0; i < spot; ++i) {
        const std::uint64_t a = va[i % pool], b = vb[i % pool];
        const std::uint64_t want = is_mul ? (a * b) % params.t : (a + b) % params.t;
        const std::uint64_t got = decode_scalar(params, decrypt(params, keys.sk, results[i]));
        if (got != want)
            throw OracleMismatch(mode_name(spec.mode) + ": item " + std::to_string(i) + " decrypts to " +
                                 std::to_string(got) + ", expected " + std::to_string(want));
    }
    return report;
}

void require_mode_family(const BenchSpec& spec, bool want_micro, const char* fn) {
    if (is_microbench(spec.mode) != want_micro)
        throw std::invalid_argument(std::string(fn) + ": wrong mode " + mode_name(spec.mode));
}

void emit_meta_csv(std::ostream& out, const ReportMeta& meta) {
    out << "# pimhe " << meta.mode << " v" << meta.version << "\n";
    out << "# security=" << meta.security << " n=" << meta.n << " coeff_width=" << meta.coeff_width
        << " t=" << meta.t << "\n";
    out << "# seed=" << meta.seed << "\n";
    const PimConfig& c = meta.pim;
    out << "# pim num_cores=" << c.num_cores << " clock_mhz=" << c.clock_mhz
        << " tasklets=" << c.tasklets << " saturation_threads=" << c.saturation_threads
        << " per_core_mem_bytes=" << c.per_core_mem_bytes
        << " host_link_gbps=" << fixed6(c.host_link_gbps) << "\n";
    out << "# cost add=" << c.cost.add << " addc=" << c.cost.addc << " load=" << c.cost.load
        << " store=" << c.cost.store << " mul32=" << c.cost.mul32
        << " loop_overhead=" << c.cost.loop_overhead << "\n";
}

const char* kReportColumns =
    "cores_used,tasklets_used,cycles_per_core,elapsed_ms,transfer_ms,"
    "bytes_to_pim,bytes_from_pim,adds,addcs,muls32,loads,stores,loop_overhead";

void emit_report_csv_fields(std::ostream& out, const KernelReport& r) {
    out << r.cores_used << ',' << r.tasklets_used << ',' << r.cycles_per_core << ','
        << fixed6(r.elapsed_ms) << ',' << fixed6(r.transfer_ms) << ',' << r.bytes_to_pim << ','
        << r.bytes_from_pim << ',' << r.instr.adds << ',' << r.instr.addcs << ','
        << r.instr.muls32 << ',' << r.instr.loads << ',' << r.instr.stores << ','
        << r.instr.loop_overhead;
}

nlohmann::ordered_json meta_json(const ReportMeta& meta) {
    nlohmann::ordered_json j;
    j["mode"] = meta.mode;
    j["version"] = meta.version;
    j["security"] = meta.security;
    j["n"] = meta.n;
    j["coeff_width"] = meta.coeff_width;
    j["t"] = meta.t;
    j["seed"] = meta.seed;
    j["pim"] = meta.pim.to_json();
    return j;
}

} // namespace

std::string mode_name(Mode mode) {
    switch (mode) {
    case Mode::microbench_add: return "microbench-add";
    case Mode::microbench_mul: return "microbench-mul";
    case Mode::workload_mean: return "workload-mean";
    case Mode::workload_variance: return "workload-variance";
    case Mode::workload_linreg: return "workload-linreg";
    }
    throw std::invalid_argument("mode_name: bad mode value");
}

Mode parse_mode(const std::string& name) {
    if (name == "microbench-add") return Mode::microbench_add;
    if (name == "microbench-mul") return Mode::microbench_mul;
    if (name == "workload-mean") return Mode::workload_mean;
    if (name == "workload-variance") return Mode::workload_variance;
    if (name == "workload-linreg") return Mode::workload_linreg;
    throw std::invalid_argument(
        "unknown mode '" + name +
        "' (expected microbench-add, microbench-mul, workload-mean, workload-variance or workload-linreg)");
}

void BenchSpec::validate() const {
    if (security != 27 && security != 54 && security != 109)
        throw std::invalid_argument("security must be 27, 54 or 109 (got " +
                                    std::to_string(security) + ")");
    for (std::uint64_t v : items)
        if (v == 0) throw std::invalid_argument("items: entries must be positive");
    if (users == 0) throw std::invalid_argument("users must be positive");
    if (cts_per_user == 0) throw std::invalid_argument("cts-per-user must be positive");
    pim.validate();
}

std::uint64_t workload_t_override(Mode mode, int security) {
    // The mean pipeline never multiplies ciphertexts, so the 27-bit set can
    // trade its multiplication headroom for sum range.
    if (mode == Mode::workload_mean && security == 27) return 257;
    return 0;
}

MicrobenchResult run_microbench(const BenchSpec& spec) {
    spec.validate();
    require_mode_family(spec, true, "run_microbench");
    const bool is_mul = spec.mode == Mode::microbench_mul;
    const HeParams params = make_params(spec.security);
    const std::vector<std::uint64_t>& sweep = spec.items.empty() ? default_sweep(spec.mode) : spec.items;
    const std::uint64_t cap = is_mul ? kFunctionalMulCap : kFunctionalAddCap;

    MicrobenchResult out;
    out.meta = make_meta(spec, params);
    KeyPair keys;
    bool have_keys = false;
    for (std::uint64_t count : sweep) {
        MicrobenchRow row;
        row.items = count;
        if (!spec.cost_only && count > cap) {
            out.any_estimated = true;
            std::cerr << "note: " << count << " items exceed the functional cap of " << cap
                      << "; that row is a cost-only estimate\n";
        }
        if (!spec.cost_only && count <= cap) {
            if (!have_keys) {
                keys = keygen(params, spec.seed ^ kKeySalt);
                have_keys = true;
            }
            row.report = functional_row(params, keys, count, is_mul, spec);
            row.functional = true;
        } else {
            row.report = cost_only_estimate(is_mul ? KernelKind::vector_mul : KernelKind::vector_add,
                                            count, params, spec.pim);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

WorkloadResult run_workload(const BenchSpec& spec) {
    spec.validate();
    require_mode_family(spec, false, "run_workload");
    const HeParams params = make_params(spec.security, workload_t_override(spec.mode, spec.security));
    const std::uint64_t t = params.t;
    const std::uint64_t data_seed = spec.seed ^ kDataSalt;

    UserDataset data;
    RegressionModel model;
    std::uint64_t device_items = 0;
    switch (spec.mode) {
    case Mode::workload_mean:
        // Packed layout: one ciphertext per user, cts_per_user values in its
        // slots; every slot column must sum below t across all users.
        data = synthetic_values(spec.users, spec.cts_per_user, (t - 1) / spec.users, data_seed);
        device_items = spec.users;
        break;
    case Mode::workload_variance: {
        const std::uint64_t count = spec.users * spec.cts_per_user;
        // Values capped so the sum of squares stays below t without clamping.
        data = synthetic_values(spec.users, spec.cts_per_user, isqrt_u64((t - 1) / count), data_seed);
        device_items = count;
        break;
    }
    case Mode::workload_linreg: {
        data = synthetic_features(spec.users, spec.cts_per_user, t - 1, data_seed);
        Prng mr(spec.seed ^ kModelSalt);
        model.weights = {mr.below(t), mr.below(t), mr.below(t)};
        model.bias = mr.below(t);
        device_items = spec.users * spec.cts_per_user;
        break;
    }
    default:
        break;
    }

    const std::uint64_t cap = spec.mode == Mode::workload_mean ? kFunctionalAddCap : kFunctionalMulCap;
    WorkloadOptions opt;
    opt.enc_seed = spec.seed ^ kEncSalt;
    opt.cost_only = spec.cost_only;
    bool estimated = false;
    if (!spec.cost_only && device_items > cap) {
        estimated = true;
        opt.cost_only = true;
        std::cerr << "note: " << device_items << " work items exceed the functional cap of " << cap
                  << "; reporting a cost-only estimate\n";
    }

    KeyPair keys;
    if (!opt.cost_only) keys = keygen(params, spec.seed ^ kKeySalt);

    PipelineResult pipeline;
    switch (spec.mode) {
    case Mode::workload_mean:
        pipeline = mean_pipeline(params, keys, data, spec.pim, opt);
        break;
    case Mode::workload_variance:
        pipeline = variance_pipeline(params, keys, data, spec.pim, opt);
        break;
    case Mode::workload_linreg:
        pipeline = linreg_pipeline(params, keys, data, model, spec.pim, opt);
        break;
    default:
        break;
    }

    if (pipeline.functional) {
        std::vector<Rational> want;
        if (spec.mode == Mode::workload_mean) want = {oracle_mean(data)};
        else if (spec.mode == Mode::workload_variance) want = {oracle_variance(data)};
        else
            for (std::uint64_t v : oracle_linreg(data, model, t))
                want.push_back(Rational::make(static_cast<std::int64_t>(v), 1));
        if (pipeline.answers.size() != want.size())
            throw OracleMismatch(mode_name(spec.mode) + ": expected " + std::to_string(want.size()) +
                                 " answers, pipeline produced " + std::to_string(pipeline.answers.size()));
        for (std::size_t i = 0; i < want.size(); ++i)
            if (!(pipeline.answers[i] == want[i]))
                throw OracleMismatch(mode_name(spec.mode) + ": answer " + std::to_string(i) + " is " +
                                     std::to_string(pipeline.answers[i].num) + "/" +
                                     std::to_string(pipeline.answers[i].den) + ", host oracle says " +
                                     std::to_string(want[i].num) + "/" + std::to_string(want[i].den));
    }

    WorkloadResult out;
    out.meta = make_meta(spec, params);
    out.users = spec.users;
    out.cts_per_user = spec.cts_per_user;
    out.pipeline = std::move(pipeline);
    out.estimated = estimated;
    return out;
}

void emit_report(std::ostream& out, const MicrobenchResult& result, Format format) {
    if (format == Format::csv) {
        emit_meta_csv(out, result.meta);
        out << "items,functional," << kReportColumns << "\n";
        for (const MicrobenchRow& row : result.rows) {
            out << row.items << ',' << (row.functional ? 1 : 0) << ',';
            emit_report_csv_fields(out, row.report);
            out << "\n";
        }
        return;
    }
    nlohmann::ordered_json j;
    j["schema"] = "microbench_v1";
    j["meta"] = meta_json(result.meta);
    j["rows"] = nlohmann::ordered_json::array();
    for (const MicrobenchRow& row : result.rows) {
        nlohmann::ordered_json r;
        r["items"] = row.items;
        r["functional"] = row.functional;
        r["report"] = row.report.to_json();
        j["rows"].push_back(std::move(r));
    }
    out << j.dump(2) << "\n";
}

void emit_report(std::ostream& out, const WorkloadResult& result, Format format) {
    if (format == Format::csv) {
        emit_meta_csv(out, result.meta);
        out << "# users=" << result.users << " cts_per_user=" << result.cts_per_user
            << " functional=" << (result.pipeline.functional ? 1 : 0)
            << " host_ms=" << fixed6(result.pipeline.host_ms) << "\n";
        out << "stage," << kReportColumns << "\n";
        for (const Stage& s : result.pipeline.stages) {
            out << s.name << ',';
            emit_report_csv_fields(out, s.report);
            out << "\n";
        }
        out << "total,";
        emit_report_csv_fields(out, result.pipeline.total());
        out << "\n";
        for (std::size_t i = 0; i < result.pipeline.answers.size(); ++i) {
            const Rational& a = result.pipeline.answers[i];
            out << "# answer " << i << " = " << a.num << "/" << a.den << " (" << fixed6(a.value())
                << ")\n";
        }
        return;
    }
    nlohmann::ordered_json j;
    j["schema"] = "workload_v1";
    j["meta"] = meta_json(result.meta);
    j["users"] = result.users;
    j["cts_per_user"] = result.cts_per_user;
    j["pipeline"] = result.pipeline.to_json();
    out << j.dump(2) << "\n";
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Homomorphic statistics benchmark on a simulated in-memory compute device"};
    std::string mode_str;
    int security = 27;
    std::vector<std::uint64_t> items;
    std::uint64_t users = 64, cts_per_user = 1, seed = 1;
    int tasklets = 0, cores = 0;
    bool cost_only = false;
    std::string config_path, out_path, format_str = "csv";

    app.add_option("--mode", mode_str,
                   "microbench-add | microbench-mul | workload-mean | workload-variance | workload-linreg")
        ->required();
    app.add_option("--security", security, "parameter set: 27, 54 or 109 bit modulus")
        ->check(CLI::IsMember({27, 54, 109}));
    app.add_option("--items", items, "microbench batch sizes (comma separated; default sweep otherwise)")
        ->delimiter(',');
    app.add_option("--users", users, "workload user count");
    app.add_option("--cts-per-user", cts_per_user, "values (or samples) contributed per user");
    app.add_option("--tasklets", tasklets, "hardware threads per core (overrides config)");
    app.add_option("--cores", cores, "device core count (overrides config)");
    app.add_option("--seed", seed, "root seed for keys, data and noise");
    app.add_flag("--cost-only", cost_only, "skip execution; emit the analytic cost model only");
    app.add_option("--config", config_path, "device config JSON (else $PIMHE_CONFIG, else defaults)");
    app.add_option("--out", out_path, "write the report here instead of stdout");
    app.add_option("--format", format_str, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        BenchSpec spec;
        spec.mode = parse_mode(mode_str);
        spec.security = security;
        spec.items = items;
        spec.users = users;
        spec.cts_per_user = cts_per_user;
        spec.seed = seed;
        spec.cost_only = cost_only;
        spec.format = format_str == "json" ? Format::json : Format::csv;

        std::string cfg_path = config_path;
        if (cfg_path.empty())
            if (const char* env = std::getenv("PIMHE_CONFIG")) cfg_path = env;
        if (!cfg_path.empty()) spec.pim = PimConfig::from_json_file(cfg_path);
        if (app.count("--cores")) spec.pim.num_cores = cores;
        if (app.count("--tasklets")) spec.pim.tasklets = tasklets;
        spec.validate();

        // Build the whole report before touching the output path so a failed
        // run can never leave a partial file behind.
        std::ostringstream buf;
        if (is_microbench(spec.mode))
            emit_report(buf, run_microbench(spec), spec.format);
        else
            emit_report(buf, run_workload(spec), spec.format);

        if (out_path.empty()) {
            std::cout << buf.str();
        } else {
            std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
            if (!f) {
                std::cerr << "cannot open output file: " << out_path << "\n";
                return 2;
            }
            f << buf.str();
            f.flush();
            if (!f) {
                std::cerr << "write failed: " << out_path << "\n";
                return 2;
            }
        }
        return 0;
    } catch (const OracleMismatch& e) {
        std::cerr << "oracle mismatch: " << e.what() << "\n";
        return 3;
    } catch (const OverflowError& e) {
        std::cerr << "overflow: " << e.what() << "\n";
        return 4;
    } catch (const DepthError& e) {
        std::cerr << "depth: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace pimhe::bench
