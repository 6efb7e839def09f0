// Command-line front end over the calign C API.
#include "calign/calign.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConverged = 3;

struct CliFailure {
    int code;
    std::string message;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliFailure{kExitData, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string base_dir_of(const std::string& path) {
    return std::filesystem::absolute(path).parent_path().string();
}

// Config text with an optional seed override.
std::string load_config(const std::string& path, std::optional<unsigned long long> seed) {
    std::string text = slurp(path);
    if (!seed) return text;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw CliFailure{kExitData, path + ": " + e.what()};
    }
    j["seed"] = *seed;
    return j.dump();
}

void check(calign_status st) {
    if (st == CALIGN_OK) return;
    const std::string msg = std::string(calign_status_name(st)) + ": " + calign_last_error();
    throw CliFailure{st == CALIGN_E_NONCONVERGED ? kExitNonConverged : kExitData, msg};
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliFailure{kExitData, "cannot write " + path};
    out << text << '\n';
}

// Prints CSV to stdout, JSON to --out.
void finish_table(calign_result* r, const std::string& out) {
    std::cout << calign_result_csv(r);
    if (!out.empty()) write_file(out, calign_result_json(r));
    calign_result_free(r);
}

// Prints JSON to stdout (and to --out).
void finish_json(calign_result* r, const std::string& out) {
    std::cout << calign_result_json(r) << '\n';
    if (!out.empty()) write_file(out, calign_result_json(r));
    calign_result_free(r);
}

// Test errors from a run JSON, or plain numbers separated by commas/whitespace.
std::vector<double> read_values(const std::string& path) {
    const std::string text = slurp(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
        try {
            const auto j = nlohmann::json::parse(text);
            if (j.is_array()) return j.get<std::vector<double>>();
            std::vector<double> v;
            for (const auto& f : j.at("fold_results")) v.push_back(f.at("test_error").get<double>());
            return v;
        } catch (const nlohmann::json::exception& e) {
            throw CliFailure{kExitData, path + ": " + e.what()};
        }
    }
    std::string cleaned = text;
    for (char& c : cleaned)
        if (c == ',' || c == ';') c = ' ';
    std::istringstream in(cleaned);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw CliFailure{kExitData, path + ": not a number: '" + tok + "'"};
        }
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Centered kernel alignment: weights, cross-validation and theory checks"};
    app.require_subcommand(1);

    std::string config, out;
    std::optional<unsigned long long> seed;
    int threads = 0;
    bool timing = false;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* c = sub->add_option("--config,-c", config, "JSON config file")->check(CLI::ExistingFile);
        if (config_required) c->required();
        sub->add_option("--out,-o", out, "write the JSON report here");
        sub->add_option("--seed", seed, "override the config seed");
    };

    auto* weights = app.add_subcommand("weights", "learn kernel weights on the full sample (JSON to stdout)");
    add_common(weights, true);

    auto* cv = app.add_subcommand("cv", "cross-validated comparison (CSV to stdout)");
    add_common(cv, true);
    cv->add_option("--threads", threads, "fold workers (0: MKL_THREADS or 1)");
    cv->add_flag("--timing", timing, "record wall-clock seconds in the JSON report");

    auto* corr = app.add_subcommand("correlate", "per-kernel accuracy against alignment (CSV to stdout)");
    add_common(corr, true);
    corr->add_option("--threads", threads, "kernel workers (0: MKL_THREADS or 1)");

    std::string kind;
    auto* theory = app.add_subcommand("theory", "numerical checks of the alignment bounds (CSV to stdout)");
    theory->add_option("kind", kind, "concentration | perturbation | predictor | stability | genbound | curve")
        ->required()
        ->check(CLI::IsMember({"concentration", "perturbation", "predictor", "stability", "genbound", "curve"}));
    add_common(theory, false);

    std::string baseline, candidate;
    double level = 0.1;
    auto* ttest = app.add_subcommand("ttest", "one-sided paired t-test: candidate error below baseline error");
    ttest->add_option("--baseline", baseline, "run JSON or list of errors")->required()->check(CLI::ExistingFile);
    ttest->add_option("--candidate", candidate, "run JSON or list of errors")->required()->check(CLI::ExistingFile);
    ttest->add_option("--level", level, "significance level")->check(CLI::Range(0.0, 1.0));
    ttest->add_option("--out,-o", out, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        calign_result* r = nullptr;
        if (*weights) {
            check(calign_learn_weights(load_config(config, seed).c_str(), base_dir_of(config).c_str(), &r));
            finish_json(r, out);
        } else if (*cv) {
            check(calign_run_cv(load_config(config, seed).c_str(), base_dir_of(config).c_str(), threads, timing, &r));
            finish_table(r, out);
        } else if (*corr) {
            check(calign_run_correlation(load_config(config, seed).c_str(), base_dir_of(config).c_str(), threads,
                                         &r));
            finish_table(r, out);
        } else if (*theory) {
            std::string text = "{}";
            std::string dir;
            if (!config.empty()) {
                text = load_config(config, seed);
                dir = base_dir_of(config);
            } else if (seed) {
                text = nlohmann::json{{"seed", *seed}}.dump();
            }
            check(calign_run_theory(kind.c_str(), text.c_str(), dir.c_str(), &r));
            finish_table(r, out);
        } else if (*ttest) {
            const auto a = read_values(baseline);
            const auto b = read_values(candidate);
            if (a.size() != b.size())
                throw CliFailure{kExitData, "baseline and candidate have different lengths"};
            check(calign_paired_ttest(a.data(), b.data(), a.size(), level, &r));
            finish_json(r, out);
        }
    } catch (const CliFailure& f) {
        std::cerr << "calign: " << f.message << '\n';
        return f.code;
    }
    return kExitOk;
}
