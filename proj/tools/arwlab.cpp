// arwlab: run ARW / MSIA / criterion / animal experiments from a JSON config.
//
//   arwlab <arw|msia|couple|criterion|animals|sweep> --config PATH
//          [--seed U64] [--trials N] [--out DIR] [--jobs N] [--format csv|json]
//
// Exit codes: 0 success, 2 validation error, 3 partial failure.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "arwlab/error.hpp"
#include "arwlab/harness.hpp"

namespace {

constexpr int exit_validation = 2;
constexpr int exit_failure = 3;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Activated random walk / internal aggregation lab"};
    app.set_version_flag("--version", std::string(arwlab::version));
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    std::optional<std::string> out;
    std::optional<std::int64_t> jobs;
    std::optional<std::string> format;

    for (const char* name : {"arw", "msia", "couple", "criterion", "animals", "sweep"}) {
        auto* sub = app.add_subcommand(name, std::string("run a ") + name + " experiment");
        sub->add_option("--config", config_path, "JSON experiment file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides config)");
        sub->add_option("--trials", trials, "trial count (overrides config)");
        sub->add_option("--out", out, "output directory (overrides config)");
        sub->add_option("--jobs", jobs, "worker threads (overrides config)");
        sub->add_option("--format", format, "result table format")->check(CLI::IsMember({"csv", "json"}));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_validation;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(config_path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
        } catch (const nlohmann::json::parse_error& e) {
            throw arwlab::Error(arwlab::ErrorKind::configuration, std::string("cannot parse config: ") + e.what());
        }
        if (!doc.is_object()) throw arwlab::Error(arwlab::ErrorKind::configuration, "config must be an object");
        if (doc.contains("kind") && doc["kind"] != kind)
            throw arwlab::Error(arwlab::ErrorKind::configuration,
                                "config kind '" + doc["kind"].dump() + "' does not match subcommand '" + kind + "'");
        doc["kind"] = kind;
        // Overrides land in the document so the manifest replays them.
        if (seed) doc["seed"] = *seed;
        if (trials) doc["trials"] = *trials;
        if (out) doc["out"] = *out;
        if (jobs) doc["jobs"] = *jobs;
        if (format) doc["format"] = *format;

        const auto cfg = arwlab::parse_config(doc);
        const auto outcome = arwlab::run_experiment(cfg);
        for (const auto& f : outcome.files) std::cout << f.string() << '\n';
        if (outcome.failed_trials)
            std::cerr << "arwlab: " << outcome.failed_trials << " trial(s) failed; see results\n";
        return outcome.exit_code;
    } catch (const arwlab::Error& e) {
        std::cerr << "arwlab: " << e.what() << '\n';
        const bool invalid =
            e.kind() == arwlab::ErrorKind::configuration || e.kind() == arwlab::ErrorKind::invalid_parameter;
        return invalid ? exit_validation : exit_failure;
    } catch (const std::exception& e) {
        std::cerr << "arwlab: " << e.what() << '\n';
        return 1;
    }
}
