#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selflearn/experiment.hpp"

using namespace selflearn;

namespace {

struct Args {
    std::vector<std::string> configs;
    std::uint64_t seed = 0;
    std::string out;
    std::string checkpoint;
    std::string modes;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Args& a, bool many) {
    auto* sub = app.add_subcommand(name, help);
    if (many) {
        sub->add_option("--config", a.configs, "experiment config (JSON), repeatable")->required();
    } else {
        sub->add_option("--config", a.configs, "experiment config (JSON)")->required()->expected(1);
    }
    sub->add_option("--seed", a.seed, "overrides the config seed");
    sub->add_option("--out", a.out, "output directory; overrides the config");
    return sub;
}

CommandOptions to_options(const Args& a, const CLI::App& sub) {
    CommandOptions o;
    for (const auto& c : a.configs) o.configs.emplace_back(c);
    if (sub.count("--seed")) o.seed = a.seed;
    if (!a.out.empty()) o.out = a.out;
    if (!a.checkpoint.empty()) o.checkpoint = a.checkpoint;
    o.modes = a.modes;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-lingual self-learning with uncertainty estimation"};
    app.require_subcommand(1);
    Args a;
    auto* synth = add_command(app, "synth", "generate a synthetic dataset", a, false);
    auto* run = add_command(app, "run", "run one self-learning experiment", a, false);
    auto* evu = add_command(app, "eval-uncertainty", "score a checkpoint's uncertainty on test splits", a, false);
    evu->add_option("--checkpoint", a.checkpoint, "model.json from a previous run")->required();
    auto* cmp = add_command(app, "compare", "run several modes/configs and tabulate", a, true);
    cmp->add_option("--modes", a.modes, "comma separated: direct,single,joint,sl,sl-<estimator>");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(to_options(a, *synth));
        if (*run) return cmd_run(to_options(a, *run));
        if (*evu) return cmd_eval_uncertainty(to_options(a, *evu));
        if (*cmp) return cmd_compare(to_options(a, *cmp));
    } catch (const ConfigError& e) {
        std::cerr << error_record("config", e.message(), e.field()) << '\n';
        return 2;
    } catch (const RunAborted& e) {
        std::cerr << error_record("aborted", e.what()) << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << error_record("numeric", e.what()) << '\n';
        return 3;
    } catch (const ConsistencyError& e) {
        std::cerr << error_record("consistency", e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << error_record("error", e.what()) << '\n';
        return 1;
    }
    return 1;
}
