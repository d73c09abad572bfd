#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "doctest.h"
#include "pimhe/bench.hpp"

using namespace pimhe;
using namespace pimhe::bench;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"pimhe_bench"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::size_t count_lines(const std::string& text, char prefix) {
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
        if (!line.empty() && line[0] == prefix) ++n;
    return n;
}

} // namespace

TEST_CASE("bench spec: validation and mode names") {
    CHECK(mode_name(Mode::microbench_add) == "microbench-add");
    CHECK(mode_name(Mode::workload_linreg) == "workload-linreg");
    for (Mode m : {Mode::microbench_add, Mode::microbench_mul, Mode::workload_mean,
                   Mode::workload_variance, Mode::workload_linreg})
        CHECK(parse_mode(mode_name(m)) == m);
    CHECK_THROWS_WITH_AS(parse_mode("bogus"),
                         "unknown mode 'bogus' (expected microbench-add, microbench-mul, "
                         "workload-mean, workload-variance or workload-linreg)",
                         std::invalid_argument);

    BenchSpec spec;
    CHECK_NOTHROW(spec.validate());
    spec.security = 31;
    CHECK_THROWS_WITH_AS(spec.validate(), "security must be 27, 54 or 109 (got 31)",
                         std::invalid_argument);
    spec.security = 27;
    spec.items = {4, 0};
    CHECK_THROWS_WITH_AS(spec.validate(), "items: entries must be positive", std::invalid_argument);
    spec.items.clear();
    spec.users = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.users = 4;
    spec.cts_per_user = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.cts_per_user = 1;
    spec.pim.num_cores = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("microbench: functional rows carry measured, reference-checked reports") {
    BenchSpec spec;
    spec.mode = Mode::microbench_add;
    spec.items = {16, 32};
    spec.pim.num_cores = 8;
    MicrobenchResult result = run_microbench(spec);
    REQUIRE(result.rows.size() == 2);
    CHECK(!result.any_estimated);
    CHECK(result.meta.mode == "microbench-add");
    CHECK(result.meta.security == 27);
    CHECK(result.meta.n == 1024);
    CHECK(result.meta.t == 5);

    InstrCounter expect16, expect32;
    expect16.add_scaled(cost::he_add_item(1024, 1, 2, 2), 16);
    expect32.add_scaled(cost::he_add_item(1024, 1, 2, 2), 32);
    CHECK(result.rows[0].items == 16);
    CHECK(result.rows[0].functional);
    CHECK(result.rows[0].report.instr == expect16);
    CHECK(result.rows[1].items == 32);
    CHECK(result.rows[1].report.instr == expect32);
    CHECK(result.rows[1].report.cycles_per_core > result.rows[0].report.cycles_per_core);

    SUBCASE("multiplication rows run the depth-1 kernel") {
        spec.mode = Mode::microbench_mul;
        spec.items = {6};
        MicrobenchResult mul = run_microbench(spec);
        REQUIRE(mul.rows.size() == 1);
        CHECK(mul.rows[0].functional);
        InstrCounter expect6;
        expect6.add_scaled(cost::he_mul_item(1024, 1), 6);
        CHECK(mul.rows[0].report.instr == expect6);
        CHECK(mul.rows[0].report.instr.muls32 > 0);
    }
}

TEST_CASE("microbench: oversized rows fall back to the cost model") {
    BenchSpec spec;
    spec.mode = Mode::microbench_add;
    spec.items = {8, 5000};
    MicrobenchResult result = run_microbench(spec);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0].functional);
    CHECK(!result.rows[1].functional);
    CHECK(result.any_estimated);
    HeParams params = make_params(27);
    KernelReport est = cost_only_estimate(KernelKind::vector_add, 5000, params, spec.pim);
    CHECK(result.rows[1].report.instr == est.instr);
    CHECK(result.rows[1].report.cycles_per_core == est.cycles_per_core);
    CHECK(result.rows[1].report.bytes_to_pim == est.bytes_to_pim);

    SUBCASE("cost-only runs never execute, even under the cap") {
        spec.cost_only = true;
        spec.items = {8};
        MicrobenchResult co = run_microbench(spec);
        CHECK(!co.rows[0].functional);
        CHECK(!co.any_estimated);
        CHECK(co.rows[0].report.instr ==
              cost_only_estimate(KernelKind::vector_add, 8, params, spec.pim).instr);
    }
}

TEST_CASE("microbench: built-in sweeps cover the published batch sizes") {
    BenchSpec spec;
    spec.cost_only = true;

    spec.mode = Mode::microbench_add;
    MicrobenchResult add = run_microbench(spec);
    REQUIRE(add.rows.size() == 5);
    CHECK(add.rows.front().items == 20480);
    CHECK(add.rows.back().items == 327680);

    spec.mode = Mode::microbench_mul;
    spec.security = 109;
    MicrobenchResult mul = run_microbench(spec);
    REQUIRE(mul.rows.size() == 5);
    CHECK(mul.rows.front().items == 5120);
    CHECK(mul.rows.back().items == 81920);
    CHECK(mul.meta.n == 4096);
    CHECK(mul.meta.coeff_width == 4);

    for (const MicrobenchResult* r : {&add, &mul})
        for (std::size_t i = 1; i < r->rows.size(); ++i) {
            CHECK(r->rows[i].report.cycles_per_core >= r->rows[i - 1].report.cycles_per_core);
            CHECK(r->rows[i].report.instr.total_events() >
                  r->rows[i - 1].report.instr.total_events());
        }
}

TEST_CASE("bench reports: deterministic bytes and honest CSV shape") {
    BenchSpec spec;
    spec.mode = Mode::microbench_add;
    spec.items = {100, 200};
    spec.cost_only = true;
    spec.seed = 42;
    MicrobenchResult result = run_microbench(spec);

    std::ostringstream a, b;
    emit_report(a, result, Format::csv);
    emit_report(b, result, Format::csv);
    CHECK(a.str() == b.str());

    std::istringstream lines(a.str());
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "# pimhe microbench-add v1.0.0");
    REQUIRE(std::getline(lines, line));
    CHECK(line == "# security=27 n=1024 coeff_width=1 t=5");
    REQUIRE(std::getline(lines, line));
    CHECK(line == "# seed=42");
    REQUIRE(std::getline(lines, line));
    CHECK(line.rfind("# pim num_cores=2524 clock_mhz=425 tasklets=16", 0) == 0);
    REQUIRE(std::getline(lines, line));
    CHECK(line == "# cost add=1 addc=1 load=1 store=1 mul32=96 loop_overhead=2");
    REQUIRE(std::getline(lines, line));
    CHECK(line ==
          "items,functional,cores_used,tasklets_used,cycles_per_core,elapsed_ms,transfer_ms,"
          "bytes_to_pim,bytes_from_pim,adds,addcs,muls32,loads,stores,loop_overhead");
    REQUIRE(std::getline(lines, line));
    CHECK(line.rfind("100,0,", 0) == 0);
    REQUIRE(std::getline(lines, line));
    CHECK(line.rfind("200,0,", 0) == 0);
    CHECK(!std::getline(lines, line));

    SUBCASE("json mirrors the csv rows") {
        std::ostringstream js;
        emit_report(js, result, Format::json);
        nlohmann::json j = nlohmann::json::parse(js.str());
        CHECK(j["schema"] == "microbench_v1");
        CHECK(j["meta"]["mode"] == "microbench-add");
        CHECK(j["meta"]["seed"] == 42);
        CHECK(j["meta"]["t"] == 5);
        CHECK(j["meta"]["pim"]["num_cores"] == 2524);
        REQUIRE(j["rows"].size() == 2);
        CHECK(j["rows"][0]["items"] == 100);
        CHECK(j["rows"][0]["functional"] == false);
        CHECK(j["rows"][0]["report"]["schema"] == "report_v1");
        CHECK(j["rows"][1]["report"]["cycles_per_core"] ==
              result.rows[1].report.cycles_per_core);
    }

    SUBCASE("an empty result still emits the full header") {
        MicrobenchResult empty;
        empty.meta = result.meta;
        std::ostringstream out;
        emit_report(out, empty, Format::csv);
        CHECK(count_lines(out.str(), '#') == 5);
        CHECK(out.str().find("items,functional,") != std::string::npos);
    }
}

TEST_CASE("workload bench: mean widens t, stays add-only and self-checks its answer") {
    CHECK(workload_t_override(Mode::workload_mean, 27) == 257);
    CHECK(workload_t_override(Mode::workload_mean, 54) == 0);
    CHECK(workload_t_override(Mode::workload_variance, 27) == 0);

    BenchSpec spec;
    spec.mode = Mode::workload_mean;
    spec.users = 16;
    spec.cts_per_user = 2;
    spec.pim.num_cores = 8;
    WorkloadResult result = run_workload(spec);
    CHECK(result.meta.t == 257);
    CHECK(result.users == 16);
    CHECK(result.cts_per_user == 2);
    CHECK(!result.estimated);
    CHECK(result.pipeline.functional);
    REQUIRE(result.pipeline.answers.size() == 1);
    CHECK(result.pipeline.answers[0].den >= 1);
    REQUIRE(result.pipeline.stages.size() == 1);
    CHECK(result.pipeline.stages[0].name == "reduce-sum");
    CHECK(result.pipeline.total().instr.muls32 == 0);
    CHECK(result.pipeline.host_ms > 0.0);

    SUBCASE("csv embeds the answer and the stage table") {
        std::ostringstream out;
        emit_report(out, result, Format::csv);
        const std::string text = out.str();
        CHECK(text.find("# pimhe workload-mean v1.0.0\n") != std::string::npos);
        CHECK(text.find("# users=16 cts_per_user=2 functional=1 host_ms=") != std::string::npos);
        CHECK(text.find("\nreduce-sum,") != std::string::npos);
        CHECK(text.find("\ntotal,") != std::string::npos);
        CHECK(text.find("# answer 0 = ") != std::string::npos);
    }

    SUBCASE("json wraps the pipeline result") {
        std::ostringstream out;
        emit_report(out, result, Format::json);
        nlohmann::json j = nlohmann::json::parse(out.str());
        CHECK(j["schema"] == "workload_v1");
        CHECK(j["meta"]["t"] == 257);
        CHECK(j["users"] == 16);
        CHECK(j["pipeline"]["schema"] == "pipeline_v1");
        CHECK(j["pipeline"]["functional"] == true);
        REQUIRE(j["pipeline"]["answers"].size() == 1);
    }
}

TEST_CASE("workload bench: variance and regression run functionally at small scale") {
    BenchSpec spec;
    spec.pim.num_cores = 8;

    spec.mode = Mode::workload_variance;
    spec.users = 4;
    spec.cts_per_user = 2;
    spec.security = 54;
    WorkloadResult var = run_workload(spec);
    CHECK(var.meta.t == 257);
    CHECK(var.pipeline.functional);
    REQUIRE(var.pipeline.stages.size() == 3);
    CHECK(var.pipeline.stages[0].name == "square");
    CHECK(var.pipeline.total().instr.muls32 > 0);
    REQUIRE(var.pipeline.answers.size() == 1);
    CHECK(var.pipeline.answers[0].value() >= 0.0);

    spec.mode = Mode::workload_linreg;
    spec.security = 27;
    spec.users = 2;
    spec.cts_per_user = 2;
    WorkloadResult lin = run_workload(spec);
    CHECK(lin.meta.t == 5);
    CHECK(lin.pipeline.functional);
    CHECK(lin.pipeline.answers.size() == 4);
    REQUIRE(lin.pipeline.stages.size() == 6);
    CHECK(lin.pipeline.stages[0].name == "mul-feature-0");
    CHECK(lin.pipeline.stages[5].name == "add-bias");
}

TEST_CASE("workload bench: oversized runs flip to the cost model with intact answers") {
    BenchSpec spec;
    spec.mode = Mode::workload_variance;
    spec.users = 300;
    spec.cts_per_user = 1;
    WorkloadResult result = run_workload(spec);
    CHECK(result.estimated);
    CHECK(!result.pipeline.functional);
    CHECK(result.pipeline.total().cycles_per_core > 0);
    REQUIRE(result.pipeline.answers.size() == 1);

    spec.mode = Mode::workload_mean;
    spec.users = 5000;
    WorkloadResult mean = run_workload(spec);
    CHECK(mean.estimated);
    CHECK(!mean.pipeline.functional);

    SUBCASE("explicit cost-only runs are not marked as fallbacks") {
        spec.cost_only = true;
        WorkloadResult co = run_workload(spec);
        CHECK(!co.estimated);
        CHECK(!co.pipeline.functional);
        CHECK(co.pipeline.total().cycles_per_core == mean.pipeline.total().cycles_per_core);
    }
}

TEST_CASE("cli: usage errors, report files and config precedence") {
    const std::string out_path = "bench_cli_out.tmp";
    const std::string cfg_path = "bench_cli_cfg.tmp.json";

    CHECK(cli({}) == 2);
    CHECK(cli({"--mode", "bogus"}) == 2);
    CHECK(cli({"--mode", "microbench-add", "--security", "31"}) == 2);
    CHECK(cli({"--mode", "microbench-add", "--items", "0", "--cost-only"}) == 2);
    CHECK(cli({"--mode", "workload-mean", "--users", "0"}) == 2);
    CHECK(cli({"--mode", "workload-mean", "--users", "1", "--cts-per-user", "2000"}) == 2);
    CHECK(cli({"--mode", "microbench-add", "--items", "4", "--cost-only", "--out",
               "/nonexistent-dir/x.csv"}) == 2);
    CHECK(cli({"--help"}) == 0);

    CHECK(cli({"--mode", "microbench-add", "--items", "4,8", "--cost-only", "--out", out_path}) == 0);
    std::string text = slurp(out_path);
    CHECK(text.find("# pimhe microbench-add v1.0.0\n") == 0);
    CHECK(count_lines(text, '#') == 5);
    CHECK(text.find("\n4,0,") != std::string::npos);
    CHECK(text.find("\n8,0,") != std::string::npos);

    SUBCASE("functional cli runs are byte-for-byte reproducible") {
        REQUIRE(cli({"--mode", "microbench-add", "--items", "8", "--seed", "5", "--out", out_path}) == 0);
        const std::string first = slurp(out_path);
        REQUIRE(cli({"--mode", "microbench-add", "--items", "8", "--seed", "5", "--out", out_path}) == 0);
        CHECK(first == slurp(out_path));
        CHECK(first.find("\n8,1,") != std::string::npos);
    }

    SUBCASE("json output parses and matches the requested shape") {
        REQUIRE(cli({"--mode", "workload-mean", "--users", "4", "--cts-per-user", "2",
                     "--cost-only", "--format", "json", "--out", out_path}) == 0);
        nlohmann::json j = nlohmann::json::parse(slurp(out_path));
        CHECK(j["schema"] == "workload_v1");
        CHECK(j["pipeline"]["functional"] == false);
    }

    SUBCASE("config file, environment fallback and flag override") {
        {
            std::ofstream cfg(cfg_path);
            cfg << R"({"num_cores": 8, "tasklets": 4})";
        }
        REQUIRE(cli({"--mode", "microbench-add", "--items", "4", "--cost-only", "--config",
                     cfg_path, "--out", out_path}) == 0);
        CHECK(slurp(out_path).find("# pim num_cores=8 clock_mhz=425 tasklets=4") != std::string::npos);

        setenv("PIMHE_CONFIG", cfg_path.c_str(), 1);
        REQUIRE(cli({"--mode", "microbench-add", "--items", "4", "--cost-only", "--out",
                     out_path}) == 0);
        CHECK(slurp(out_path).find("# pim num_cores=8 clock_mhz=425 tasklets=4") != std::string::npos);

        REQUIRE(cli({"--mode", "microbench-add", "--items", "4", "--cost-only", "--cores", "2",
                     "--tasklets", "11", "--out", out_path}) == 0);
        CHECK(slurp(out_path).find("# pim num_cores=2 clock_mhz=425 tasklets=11") != std::string::npos);
        unsetenv("PIMHE_CONFIG");

        {
            std::ofstream cfg(cfg_path);
            cfg << R"({"num_cores": 8, "frequency": 99})";
        }
        CHECK(cli({"--mode", "microbench-add", "--items", "4", "--cost-only", "--config", cfg_path,
                   "--out", out_path}) == 2);
        std::remove(cfg_path.c_str());
    }

    std::remove(out_path.c_str());
}
