// ssdtee: run scenarios, sweeps, the invariant self-test and fault demos.
//
// Exit codes: 0 ok, 1 bad configuration or arguments, 2 simulation error,
// 3 a self-test or tamper check failed.

#include "ssdtee/bench/checks.hpp"
#include "ssdtee/bench/report.hpp"
#include "ssdtee/bench/scenario.hpp"
#include "ssdtee/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

using namespace ssdtee;
using namespace ssdtee::bench;

namespace {

enum Exit { kOk = 0, kConfig = 1, kSimulation = 2, kCheck = 3 };

struct Options {
    std::string config;
    std::vector<std::string> scenarios;
    std::vector<std::string> workloads;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> tenants;
    std::optional<std::uint32_t> channels;
    std::optional<std::uint64_t> dataset_bytes;
    std::string out;
    std::string trace;
    bool faithful = false;
    std::string axis;
};

RunConfig build_config(const Options& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (!o.scenarios.empty()) {
        c.scenarios.clear();
        for (const auto& s : o.scenarios) {
            c.scenarios.push_back(parse_scenario(s));
        }
    }
    if (!o.workloads.empty()) {
        c.workloads = o.workloads;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.tenants) {
        c.tenants = *o.tenants;
    }
    if (o.channels) {
        c.geometry.channels = *o.channels;
    }
    if (o.dataset_bytes) {
        c.dataset_bytes = *o.dataset_bytes;
    }
    c.faithful = c.faithful || o.faithful;
    c.validate();
    return c;
}

void emit(const Options& o, const std::vector<RunReport>& reports) {
    if (o.out.empty() || o.out == "-") {
        write_csv(std::cout, reports);
    } else {
        write_csv(o.out, reports);
    }
}

std::unique_ptr<std::ofstream> open_trace(const Options& o) {
    if (o.trace.empty()) {
        return nullptr;
    }
    auto f = std::make_unique<std::ofstream>(o.trace, std::ios::binary);
    if (!*f) {
        throw IoError("cannot open " + o.trace + " for writing");
    }
    return f;
}

int print_checks(const std::vector<CheckResult>& results) {
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) {
            std::cout << "  [" << r.detail << ']';
        }
        std::cout << '\n';
    }
    return all_passed(results) ? kOk : kCheck;
}

void common_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--scenario", o.scenarios, "host, host-sgx, isc or iceclave (repeatable)");
    cmd->add_option("--workload", o.workloads, "workload name (repeatable)");
    cmd->add_option("--seed", o.seed, "simulation seed");
    cmd->add_option("--tenants", o.tenants, "concurrent TEEs");
    cmd->add_option("--channels", o.channels, "flash channels");
    cmd->add_option("--dataset-bytes", o.dataset_bytes, "dataset size per tenant");
    cmd->add_flag("--faithful", o.faithful, "carry real payloads and verify every result");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ssdtee: in-storage TEE simulator"};
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run", "run scenarios x workloads, one CSV row each");
    common_flags(run, o);
    run->add_option("--out", o.out, "CSV output (default stdout)");
    run->add_option("--trace", o.trace, "event and lifecycle log");

    auto* sweep = app.add_subcommand("sweep", "repeat the run along one axis");
    common_flags(sweep, o);
    sweep->add_option("--axis", o.axis, "channels, t_rd, dram or tenants")->required();
    sweep->add_option("--out", o.out, "CSV output (default stdout)");

    auto* self = app.add_subcommand("selftest", "check model invariants");
    common_flags(self, o);

    auto* tamper = app.add_subcommand("tamper", "inject faults and confirm each is caught");
    tamper->add_option("--seed", o.seed, "fault placement seed");

    auto* show = app.add_subcommand("config", "print the effective configuration");
    common_flags(show, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) {
            const RunConfig c = build_config(o);
            auto trace = open_trace(o);
            emit(o, run_all(c, trace.get()));
        } else if (*sweep) {
            const Axis axis = parse_axis(o.axis);
            emit(o, run_sweep(build_config(o), axis));
        } else if (*self) {
            return print_checks(selftest(build_config(o)));
        } else if (*tamper) {
            return print_checks(tamper_demos(o.seed.value_or(1)));
        } else if (*show) {
            std::cout << dump_config(build_config(o)) << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const UnknownAxis& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const UnknownWorkload& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kConfig;
    } catch (const Error& e) {
        std::cerr << "simulation error: " << e.what() << '\n';
        return kSimulation;
    }
    return kOk;
}
