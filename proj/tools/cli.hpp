#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "safs/safs.hpp"

namespace safs::cli {

enum exit_code : int { ok = 0, usage = 1, data = 2, guard = 3 };

/// Resolved options shared by every command.
struct run_config {
    std::string input;
    std::string outcome = "y";
    std::size_t bins = 4;
    std::string method = "safs";
    std::optional<std::size_t> k;
    std::string k_grid;
    std::string dir = "over";
    std::size_t restarts = 50;
    std::size_t sigma = 100;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
    std::size_t reps = 3;
    bool exhaustive = false;
    bool test = false;

    // synth
    std::size_t rows = 20000;
    std::size_t features = 20;
    std::size_t cardinality = 4;
    std::vector<std::size_t> cardinalities;
    double base_rate = 0.25;
    std::string plant;
    double q = 3.0;
};

/// Provenance block written into every report. Thread count and output
/// directory are left out: they do not change any result.
inline json config_to_json(const run_config& c, const std::string& command) {
    json j = {{"command", command}};
    if (command == "synth") {
        j["rows"] = c.rows;
        j["cardinalities"] = c.cardinalities;
        j["base_rate"] = c.base_rate;
        j["plant"] = c.plant;
        j["q_true"] = c.q;
    } else {
        j["input"] = c.input;
        j["outcome"] = c.outcome;
        j["bins"] = c.bins;
        j["method"] = c.method;
    }
    if (command == "scan" || command == "test" || command == "bench") {
        j["direction"] = c.dir;
        j["restarts"] = c.restarts;
        if (c.k) j["k"] = *c.k;
        if (!c.k_grid.empty()) j["k_grid"] = c.k_grid;
        if (command == "test" || c.test) j["sigma"] = c.sigma;
        if (command == "bench") j["repetitions"] = c.reps;
        if (c.exhaustive) j["exhaustive"] = true;
    }
    if (c.seed) j["seed"] = *c.seed;
    return j;
}

/// Writes through a temporary file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw data_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& doc) { write_atomic(path, doc.dump(2) + "\n"); }

inline ranking_method parse_method(const std::string& m) {
    if (m == "safs") return ranking_method::safs;
    if (m == "mi") return ranking_method::mutual_information;
    throw usage_error("unknown ranking method: " + m);
}

inline direction parse_direction(const std::string& d) {
    if (d == "over") return direction::over;
    if (d == "under") return direction::under;
    throw usage_error("unknown direction: " + d);
}

/// "auto" gives the default tenths-of-M grid; otherwise a comma list of K values.
inline std::vector<std::size_t> parse_k_grid(const std::string& text, std::size_t m) {
    if (text.empty() || text == "auto") return top_k_grid(m);
    std::vector<std::size_t> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t k = 0;
        try {
            std::size_t used = 0;
            k = std::stoul(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw usage_error("invalid K in grid: " + item);
        }
        if (k < 1 || k > m) throw usage_error("K-grid entry " + item + " outside [1, M]");
        if (!grid.empty() && k <= grid.back()) throw usage_error("K-grid must be strictly increasing");
        grid.push_back(k);
    }
    if (grid.empty()) throw usage_error("empty K-grid");
    return grid;
}

/// Planted description "2:0,1;9:1" (feature index : value codes).
inline subgroup_description parse_plant(const std::string& text) {
    subgroup_description::clause_map clauses;
    std::stringstream ss(text);
    std::string clause;
    while (std::getline(ss, clause, ';')) {
        if (clause.empty()) continue;
        const auto colon = clause.find(':');
        if (colon == std::string::npos) throw usage_error("planted clause needs feature:values, got " + clause);
        try {
            const auto feature = std::stoul(clause.substr(0, colon));
            std::vector<code_t> values;
            std::stringstream vs(clause.substr(colon + 1));
            std::string v;
            while (std::getline(vs, v, ',')) values.push_back(static_cast<code_t>(std::stoul(v)));
            if (values.empty()) throw usage_error("planted clause selects no values: " + clause);
            if (clauses.count(feature)) throw usage_error("planted clause repeats feature " + std::to_string(feature));
            clauses[feature] = std::move(values);
        } catch (const std::logic_error&) {
            throw usage_error("malformed planted clause: " + clause);
        }
    }
    return subgroup_description(std::move(clauses));
}

struct loaded {
    dataset data;
    std::vector<binning_rule> rules;
};

inline loaded load_input(const run_config& c) {
    if (c.input.empty()) throw usage_error("--input is required");
    auto raw = load_csv(c.input, c.outcome);
    auto d = discretize(raw, c.bins);
    nondegenerate_mean(d.data);
    return {std::move(d.data), std::move(d.rules)};
}

inline std::uint64_t require_seed(const run_config& c) {
    if (!c.seed) throw usage_error("--seed is required for this command");
    return *c.seed;
}

inline json feature_names(const dataset& data, const std::vector<std::size_t>& features) {
    json names = json::array();
    for (auto f : features) names.push_back(data.feature(f).name);
    return names;
}

inline std::filesystem::path prepare_out(const run_config& c) {
    if (c.out.empty()) throw usage_error("--out is required");
    std::filesystem::path out(c.out);
    std::filesystem::create_directories(out);
    return out;
}

inline int cmd_synth(const run_config& c, std::ostream& log) {
    auto conf = c;
    synthetic_config s;
    s.rows = c.rows;
    s.cardinalities = c.cardinalities.empty() ? std::vector<std::size_t>(c.features, c.cardinality) : c.cardinalities;
    conf.cardinalities = s.cardinalities;
    s.base_rate = c.base_rate;
    s.planted = parse_plant(c.plant);
    s.q_true = c.q;
    s.seed = require_seed(c);
    const auto data = synthesize(s);
    const auto out = prepare_out(c);

    std::ostringstream table;
    write_csv(table, data, c.outcome);
    write_atomic(out / "data.csv", table.str());

    const auto members = s.planted.members(data);
    std::uint64_t y_in = 0;
    for (auto i : members) y_in += data.outcome()[i];
    json truth = {{"config", config_to_json(conf, "synth")},
                  {"planted", description_to_json(data, s.planted)},
                  {"q_true", s.q_true},
                  {"base_rate", s.base_rate},
                  {"planted_n", members.size()},
                  {"planted_y_sum", y_in},
                  {"global_mean", data.global_mean()}};
    write_json(out / "truth.json", truth);
    log << "wrote " << data.rows() << " rows x " << data.num_features() << " features to " << (out / "data.csv").string()
        << " (planted subgroup: " << members.size() << " rows)\n";
    return ok;
}

inline int cmd_select(const run_config& c, std::ostream& log) {
    const auto in = load_input(c);
    const auto method = parse_method(c.method);
    const auto ranking = rank(in.data, method, c.threads);
    const auto out = prepare_out(c);
    json doc = {{"config", config_to_json(c, "select")},
                {"method", to_string(method)},
                {"ranking", ranking_to_json(in.data, ranking)}};
    write_json(out / "ranking.json", doc);
    write_json(out / "binning.json", json(to_json(in.rules)));

    std::ostringstream text;
    text << std::left << std::setw(6) << "rank" << std::setw(32) << "feature" << (method == ranking_method::safs ? "eta" : "mi")
         << "\n";
    for (std::size_t r = 0; r < ranking.order.size(); ++r) {
        const auto m = ranking.order[r];
        text << std::left << std::setw(6) << r + 1 << std::setw(32) << in.data.feature(m).name << std::fixed
             << std::setprecision(6) << ranking.scores[m] << "\n";
    }
    write_atomic(out / "ranking.txt", text.str());
    log << text.str();
    return ok;
}

inline scan_settings settings_from(const run_config& c) {
    scan_settings s;
    s.restarts = c.restarts;
    s.dir = parse_direction(c.dir);
    s.seed = require_seed(c);
    s.workers = c.threads;
    return s;
}

inline int cmd_scan(const run_config& c, std::ostream& log) {
    const auto in = load_input(c);
    const auto settings = settings_from(c);
    const auto method = parse_method(c.method);
    const auto ranking = rank(in.data, method, c.threads);
    std::vector<std::size_t> grid;
    if (c.k && !c.k_grid.empty()) throw usage_error("use either --k or --k-grid");
    if (c.k) {
        if (*c.k < 1 || *c.k > in.data.num_features()) throw usage_error("K must lie in [1, M]");
        grid = {*c.k};
    } else {
        grid = parse_k_grid(c.k_grid, in.data.num_features());
    }
    const auto out = prepare_out(c);
    const auto config = config_to_json(c, "scan");

    std::ostringstream curves, table;
    curves << "k,score,n,seconds\n";
    table << "top_k, size, odds_ratio (95% CI), p_value\n";
    json overlap = json::object();
    for (auto k : grid) {
        const auto features = select_top_k(ranking, k);
        const auto start = std::chrono::steady_clock::now();
        const auto result = c.exhaustive ? brute_force_scan(in.data, features, settings.dir)
                                         : scan_with_restarts(in.data, features, settings);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        json report = {{"config", config}, {"k", k}, {"features", feature_names(in.data, features)},
                       {"scan", scan_to_json(in.data, result)}};
        std::optional<odds_ratio_report> odds;
        if (!result.description.empty()) odds = subgroup_odds_ratio(in.data, result.description);
        if (odds && c.test) {
            const auto sig = randomization_test(in.data, method, k, settings, c.sigma);
            odds->p = sig.p;
            report["significance"] = significance_to_json(sig);
        }
        report["odds_ratio"] = odds ? odds_ratio_to_json(*odds) : json(nullptr);
        const std::string row = odds ? format_table_row(*odds) : std::to_string(result.n) + ", -, -";
        report["table_row"] = row;
        write_json(out / ("scan_k" + std::to_string(k) + ".json"), report);

        json anomalous = json::array();
        for (const auto& [f, values] : result.description.clauses()) anomalous.push_back(in.data.feature(f).name);
        overlap[std::to_string(k)] = std::move(anomalous);
        curves << k << ',' << std::setprecision(17) << result.score << ',' << result.n << ',' << seconds << '\n';
        table << k << ", " << row << '\n';
        log << "K=" << k << "  score=" << std::setprecision(6) << result.score << "  "
            << result.description.to_string(in.data) << "\n    " << row << '\n';
    }
    write_json(out / "anomalous_features.json", json{{"config", config}, {"features_by_k", overlap}});
    write_atomic(out / "table.txt", table.str());
    write_atomic(out / "curves.csv", curves.str());
    return ok;
}

inline int cmd_test(const run_config& c, std::ostream& log) {
    const auto in = load_input(c);
    const auto settings = settings_from(c);
    if (!c.k) throw usage_error("--k is required for test");
    if (c.sigma < 1) throw usage_error("--sigma must be at least 1");
    const auto method = parse_method(c.method);
    const auto sig = randomization_test(in.data, method, *c.k, settings, c.sigma);
    const auto out = prepare_out(c);
    json report = {{"config", config_to_json(c, "test")},
                   {"k", *c.k},
                   {"features", feature_names(in.data, sig.actual_features)},
                   {"scan", scan_to_json(in.data, sig.actual_scan)},
                   {"significance", significance_to_json(sig)}};
    if (!sig.actual_scan.description.empty()) {
        auto odds = subgroup_odds_ratio(in.data, sig.actual_scan.description);
        odds.p = sig.p;
        report["odds_ratio"] = odds_ratio_to_json(odds);
        report["table_row"] = format_table_row(odds);
        log << *c.k << ", " << format_table_row(odds) << '\n';
    }
    write_json(out / "significance.json", report);
    log << "actual=" << sig.actual << " xi=" << sig.xi << " sigma=" << sig.sigma() << " p=" << sig.p << '\n';
    return ok;
}

inline int cmd_bench(const run_config& c, std::ostream& log) {
    const auto in = load_input(c);
    const auto settings = settings_from(c);
    const auto grid = parse_k_grid(c.k_grid, in.data.num_features());
    const auto ranking = rank(in.data, parse_method(c.method), c.threads);
    const auto rows = bench_top_k(in.data, ranking, grid, settings, c.reps);
    const auto out = prepare_out(c);
    std::ostringstream csv_out;
    csv_out << "k,score,n,seconds_median\n";
    for (const auto& r : rows)
        csv_out << r.k << ',' << std::setprecision(17) << r.score << ',' << r.n << ',' << r.seconds_median << '\n';
    write_atomic(out / "bench.csv", csv_out.str());
    json summary = {{"config", config_to_json(c, "bench")}, {"grid", grid}};
    json results = json::array();
    for (const auto& r : rows) results.push_back({{"k", r.k}, {"score", r.score}, {"n", r.n}});
    summary["results"] = std::move(results);
    write_json(out / "bench.json", summary);
    log << csv_out.str();
    return ok;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Anomalous subgroup discovery: sparsity-based feature selection, subset scanning, randomization tests"};
    app.require_subcommand(1);
    run_config c;
    std::uint64_t seed = 0;

    auto add_input = [&](CLI::App* sub) {
        sub->add_option("--input", c.input, "CSV table with a header row")->required();
        sub->add_option("--outcome", c.outcome, "binary outcome column")->capture_default_str();
        sub->add_option("--bins", c.bins, "quantile bins per numeric column")->capture_default_str()->check(CLI::Range(2, 1000));
        sub->add_option("--method", c.method, "feature ranking")->check(CLI::IsMember({"safs", "mi"}))->capture_default_str();
        sub->add_option("--threads", c.threads, "worker threads")->capture_default_str()->check(CLI::Range(1u, 256u));
        sub->add_option("--out", c.out, "output directory")->required();
    };
    auto add_scan = [&](CLI::App* sub) {
        sub->add_option("--direction", c.dir, "over | under")->check(CLI::IsMember({"over", "under"}))->capture_default_str();
        sub->add_option("--restarts", c.restarts, "random restarts")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "random seed")->required();
    };

    auto* synth = app.add_subcommand("synth", "write a synthetic table with one planted subgroup");
    synth->add_option("--rows", c.rows)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--features", c.features)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--cardinality", c.cardinality, "values per feature")->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--cardinalities", c.cardinalities, "per-feature value counts (overrides --features/--cardinality)")
        ->delimiter(',');
    synth->add_option("--base-rate", c.base_rate)->capture_default_str();
    synth->add_option("--plant", c.plant, "planted clauses, e.g. \"2:0,1;9:1\"")->required();
    synth->add_option("--q", c.q, "planted odds multiplier")->capture_default_str();
    synth->add_option("--outcome", c.outcome)->capture_default_str();
    synth->add_option("--seed", seed)->required();
    synth->add_option("--out", c.out)->required();

    auto* select = app.add_subcommand("select", "rank features");
    add_input(select);

    auto* scan = app.add_subcommand("scan", "scan the top-K features for the most anomalous subgroup");
    add_input(scan);
    add_scan(scan);
    auto* k_opt = scan->add_option("--k", c.k, "number of top features");
    scan->add_option("--k-grid", c.k_grid, "comma list of K values, or auto")->excludes(k_opt);
    scan->add_flag("--test", c.test, "also run the randomization test for every K");
    scan->add_option("--sigma", c.sigma, "randomization trials (with --test)")->capture_default_str()->check(CLI::PositiveNumber);
    scan->add_flag("--exhaustive", c.exhaustive, "enumerate every subgroup instead of ascent");

    auto* test = app.add_subcommand("test", "randomization significance test");
    add_input(test);
    add_scan(test);
    test->add_option("--k", c.k)->required();
    test->add_option("--sigma", c.sigma)->capture_default_str()->check(CLI::PositiveNumber);

    auto* bench = app.add_subcommand("bench", "time scans across a K grid");
    add_input(bench);
    add_scan(bench);
    bench->add_option("--k-grid", c.k_grid, "comma list of K values, or auto")->capture_default_str();
    bench->add_option("--reps", c.reps, "repetitions per K")->capture_default_str()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, log, err) == 0 ? ok : usage;
    }
    c.seed = seed;
    if (select->parsed()) c.seed.reset();

    try {
        if (synth->parsed()) return cmd_synth(c, log);
        if (select->parsed()) return cmd_select(c, log);
        if (scan->parsed()) return cmd_scan(c, log);
        if (test->parsed()) return cmd_test(c, log);
        if (bench->parsed()) return cmd_bench(c, log);
    } catch (const usage_error& e) {
        err << "error: " << e.what() << '\n';
        return usage;
    } catch (const guard_error& e) {
        err << "error: " << e.what() << '\n';
        return guard;
    } catch (const data_error& e) {
        err << "error: " << e.what() << '\n';
        return data;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return data;
    }
    return usage;
}

} // namespace safs::cli
