#include "nlcomp/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Non-local parabolic comparison laboratory"};
    app.require_subcommand(1);

    std::string scenario;
    std::string out;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "Run a scenario file and write its report");
    run->add_option("scenario", scenario, "scenario .cfg file")->required();
    run->add_option("--out", out, "output directory (default $NLCOMP_OUT/<name>)");
    run->add_option("--override", overrides, "key=value applied after loading")->take_all();

    std::string canonical;
    CLI::App* show = app.add_subcommand("canonical", "Print the canonical form of a scenario file");
    show->add_option("scenario", canonical, "scenario .cfg file")->required();

    CLI::App* keys = app.add_subcommand("keys", "List accepted configuration keys");
    bool markdown = false;
    keys->add_flag("--markdown", markdown, "print a table with types, defaults and choices");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    if (*run) {
        const std::optional<std::filesystem::path> dir = out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
        return nlc::run_scenario(scenario, dir, overrides, std::cout);
    }
    if (*show) {
        try {
            std::cout << nlc::serialize_scenario(nlc::load_scenario(canonical));
        } catch (const nlc::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 4;
        }
        return 0;
    }
    if (*keys) {
        if (markdown) {
            std::cout << "| key | type | default | choices | meaning |\n|---|---|---|---|---|\n";
        }
        for (const auto& k : nlc::scenario_schema()) {
            if (!markdown) {
                std::cout << k.key << "  " << k.doc << '\n';
                continue;
            }
            std::string choices;
            for (const auto& c : k.choices) choices += (choices.empty() ? "" : ", ") + c;
            std::string required;
            for (auto m : k.required_by) required += (required.empty() ? "required by " : ", ") + nlc::to_string(m);
            if (k.required_by.size() == 8) required = "required";
            const std::string fallback = k.fallback ? "`" + nlc::render_scenario_value(*k.fallback) + "`" : required;
            std::cout << "| `" << k.key << "` | " << nlc::to_string(k.type) << " | " << fallback << " | " << choices
                      << " | " << k.doc << " |\n";
        }
    }
    return 0;
}
