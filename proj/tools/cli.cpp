#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <CLI11.hpp>

#include "hrplab/allocation.hpp"
#include "hrplab/backtest.hpp"
#include "hrplab/error.hpp"
#include "hrplab/estimation.hpp"
#include "hrplab/hcluster.hpp"
#include "hrplab/market_data.hpp"
#include "hrplab/report.hpp"

namespace hrplab::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
    } else {
        write_file(path, content);
    }
}

Month parse_month_flag(const std::string& text, const char* flag) {
    try {
        return Month::parse(text);
    } catch (const DataError&) {
        throw ValidationError(std::string(flag) + ": invalid month '" + text + "' (expected YYYY-MM)");
    }
}

struct SidesFlag {
    SideRule rule = SideRule::momentum_sign;
    std::map<std::string, int> explicit_sides;
};

SidesFlag parse_sides(const std::string& text) {
    SidesFlag s;
    if (text == "momentum" || text == "momentum_sign") {
        s.rule = SideRule::momentum_sign;
    } else if (text == "all_long" || text == "long") {
        s.rule = SideRule::all_long;
    } else if (text.rfind("file:", 0) == 0) {
        s.rule = SideRule::explicit_map;
        s.explicit_sides = load_sides_csv(text.substr(5));
    } else {
        throw ValidationError("--sides: expected momentum, all_long or file:<path>, got '" + text + "'");
    }
    return s;
}

std::vector<Method> parse_methods(const std::string& text) {
    std::vector<Method> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const Method m = parse_method(item);
        if (std::find(out.begin(), out.end(), m) != out.end()) {
            throw ValidationError("--methods: duplicate method '" + item + "'");
        }
        out.push_back(m);
    }
    if (out.empty()) throw ValidationError("--methods: no methods given");
    return out;
}

// Look-back inputs shared by allocate, dendrogram and heatmap.
struct DataFlags {
    std::string returns;
    std::string rf;
    std::string as_of;
    int lookback = 12;
    double shrink = 0.0;

    void add_to(CLI::App* sub, bool required) {
        auto* r = sub->add_option("--returns", returns, "Monthly returns CSV (date,<asset>,...)");
        auto* f = sub->add_option("--rf", rf, "Risk-free CSV (date,rf)");
        auto* a = sub->add_option("--as-of", as_of, "Allocation month YYYY-MM");
        if (required) {
            r->required();
            f->required();
            a->required();
        }
        sub->add_option("--lookback", lookback, "Look-back months")->capture_default_str();
        sub->add_option("--shrink", shrink, "Shrinkage intensity toward scaled identity, in [0, 1]")
            ->capture_default_str();
    }

    bool present() const { return !returns.empty() || !rf.empty() || !as_of.empty(); }

    ReturnsPanel lookback_excess() const {
        if (returns.empty() || rf.empty() || as_of.empty()) {
            throw ValidationError("--returns, --rf and --as-of are required together");
        }
        if (lookback < 2) throw ValidationError("--lookback must be at least 2");
        const auto panel = load_returns_csv(returns);
        const auto riskfree = load_riskfree_csv(rf);
        return excess_returns(lookback_window(panel, parse_month_flag(as_of, "--as-of"), lookback), riskfree);
    }
};

// Turns `key=value` lines into `--key value` tokens. Boolean flags accept
// true/false. Unknown keys are rejected.
std::vector<std::string> config_tokens(const std::string& path, CLI::App* sub) {
    std::ifstream in(path);
    if (!in) throw ValidationError("--config: cannot open " + path);
    std::vector<std::string> tokens;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("--config " + path + ":" + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        while (key.rfind("-", 0) == 0) key.erase(0, 1);
        std::replace(key.begin(), key.end(), '_', '-');
        const std::string flag = "--" + key;
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (opt == nullptr || key == "config") {
            throw ValidationError("--config " + path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value.empty()) {
                tokens.push_back(flag);
            } else if (value != "false" && value != "0") {
                throw ValidationError("--config " + path + ":" + std::to_string(line_no) + ": '" + key +
                                      "' expects true or false");
            }
        } else {
            tokens.push_back(flag);
            tokens.push_back(value);
        }
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Subcommands

struct GenFlags {
    SyntheticSpec spec;
    std::string start = "2000-01";
    std::string out_dir;
    bool force = false;
};

void cmd_gen(const GenFlags& f) {
    SyntheticSpec spec = f.spec;
    spec.start = parse_month_flag(f.start, "--start");
    spec.validate();

    const fs::path dir(f.out_dir);
    const std::vector<fs::path> files{dir / "returns.csv", dir / "riskfree.csv", dir / "factors.csv"};
    if (!f.force) {
        for (const auto& p : files) {
            if (fs::exists(p)) throw ValidationError(p.string() + " exists; pass --force to overwrite");
        }
    }
    const auto data = generate_synthetic(spec);
    std::ostringstream r, rf, fac;
    write_returns_csv(r, data.returns);
    write_riskfree_csv(rf, data.riskfree);
    write_factors_csv(fac, data.factors);
    write_file(files[0], r.str());
    write_file(files[1], rf.str());
    write_file(files[2], fac.str());
}

struct AllocateFlags {
    DataFlags data;
    std::string method = "hrp";
    std::string sides = "momentum";
    std::string out;
};

std::string cmd_allocate(const AllocateFlags& f) {
    BacktestConfig config;
    const Method method = parse_method(f.method);
    const auto sides = parse_sides(f.sides);
    config.side_rule = sides.rule;
    config.explicit_sides = sides.explicit_sides;
    config.lookback_months = f.data.lookback;
    config.shrinkage_delta = f.data.shrink;
    config.methods = {method};
    config.validate();

    const auto lookback = f.data.lookback_excess();
    if ((method == Method::gmv || method == Method::tangency) && config.shrinkage_delta == 0.0 &&
        lookback.cols() >= lookback.rows()) {
        throw NumericalError(to_string(method) + ": " + std::to_string(lookback.cols()) + " assets with only " +
                             std::to_string(lookback.rows()) +
                             " look-back months gives a singular covariance; pass --shrink > 0");
    }
    const auto alloc = allocate(lookback, method, config);
    return allocation_to_json(alloc, parse_month_flag(f.data.as_of, "--as-of"), f.data.lookback);
}

struct BacktestFlags {
    std::string returns;
    std::string rf;
    std::string factors;
    std::string methods = "hrp,gmv";
    int lookback = 12;
    int hold = 3;
    std::string sides = "momentum";
    double shrink = 0.0;
    std::string start;
    std::string end;
    double downturn_threshold = 0.0;
    bool downturns_only = false;
    int jobs = 0;
    std::string out;
};

std::string cmd_backtest(const BacktestFlags& f) {
    BacktestConfig config;
    config.lookback_months = f.lookback;
    config.hold_months = f.hold;
    config.methods = parse_methods(f.methods);
    const auto sides = parse_sides(f.sides);
    config.side_rule = sides.rule;
    config.explicit_sides = sides.explicit_sides;
    config.shrinkage_delta = f.shrink;
    if (!f.start.empty()) config.start = parse_month_flag(f.start, "--start");
    if (!f.end.empty()) config.end = parse_month_flag(f.end, "--end");
    config.downturn_threshold = f.downturn_threshold;
    config.downturns_only = f.downturns_only;
    config.jobs = f.jobs > 0 ? f.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    config.validate();

    const auto panel = load_returns_csv(f.returns);
    const auto rf = load_riskfree_csv(f.rf);
    const auto factors = load_factors_csv(f.factors);
    return report_to_json(run_backtest(panel, rf, factors, config));
}

struct ReportFlags {
    std::string in;
    std::string format = "table";
    bool market = false;
    std::string out;
};

std::string cmd_report(const ReportFlags& f) {
    const auto format = parse_table_format(f.format);
    const auto report = report_from_json(read_file(f.in));
    TableOptions options;
    options.include_market = f.market;
    const bool to_terminal = (f.out.empty() || f.out == "-") && ::isatty(STDOUT_FILENO) != 0;
    options.styled = format == TableFormat::table && to_terminal && std::getenv("HRPLAB_NO_COLOR") == nullptr;
    return render_table(report, format, options);
}

struct Clustered {
    CovarianceEstimate cov;
    CorrelationMatrix corr;
    LinkageTree tree;
};

Clustered cluster_from(const DataFlags& data) {
    const auto lookback = data.lookback_excess();
    auto cov = shrink(sample_covariance(lookback), data.shrink);
    auto corr = correlation(cov);
    auto tree = single_linkage(distance_matrix(corr));
    return Clustered{std::move(cov), std::move(corr), std::move(tree)};
}

struct DendrogramFlags {
    DataFlags data;
    std::string svg;
    std::string json;
};

void cmd_dendrogram(const DendrogramFlags& f) {
    const auto c = cluster_from(f.data);
    const auto& labels = c.cov.assets();
    std::string json_path = f.json;
    if (json_path.empty()) json_path = fs::path(f.svg).replace_extension(".json").string();
    write_file(f.svg, render_dendrogram_svg(c.tree, labels));
    write_file(json_path, tree_to_json(c.tree, labels) + "\n");
}

struct HeatmapFlags {
    DataFlags data;
    std::string matrix;
    std::string tree;
    std::string order = "seriated";
    std::string kind = "corr";
    std::string svg;
    std::string matrix_out;
};

void cmd_heatmap(const HeatmapFlags& f) {
    if (f.order != "original" && f.order != "seriated") {
        throw ValidationError("--order: expected original or seriated, got '" + f.order + "'");
    }
    if (f.kind != "corr" && f.kind != "cov") throw ValidationError("--kind: expected corr or cov, got '" + f.kind + "'");
    const bool seriated = f.order == "seriated";
    const bool is_corr = f.kind == "corr";

    std::vector<std::string> assets;
    Eigen::MatrixXd matrix;
    std::optional<Seriation> order;

    if (!f.matrix.empty()) {
        if (f.data.present()) throw ValidationError("--matrix cannot be combined with --returns/--rf/--as-of");
        std::ifstream in(f.matrix);
        if (!in) throw DataError("cannot open " + f.matrix);
        auto m = read_matrix_csv(in, f.matrix);
        // Validate through the domain types.
        if (is_corr) {
            CorrelationMatrix checked(m.assets, m.matrix);
            matrix = checked.matrix();
        } else {
            CovarianceEstimate checked(m.assets, m.matrix);
            matrix = checked.matrix();
        }
        assets = m.assets;
        if (seriated) {
            if (f.tree.empty()) {
                throw ValidationError("--order seriated needs clustering inputs: pass --tree with --matrix, or use "
                                      "--returns/--rf/--as-of");
            }
            const auto t = tree_from_json(read_file(f.tree));
            if (t.labels != assets) throw DataError("--tree labels do not match the matrix asset order");
            order = quasi_diagonalize(t.tree);
        }
    } else if (f.data.present()) {
        const auto c = cluster_from(f.data);
        assets = c.cov.assets();
        matrix = is_corr ? c.corr.matrix() : c.cov.matrix();
        if (seriated) order = quasi_diagonalize(c.tree);
    } else {
        throw ValidationError("heatmap needs --matrix or --returns/--rf/--as-of");
    }

    if (!f.matrix_out.empty()) {
        std::ostringstream csv;
        write_matrix_csv(csv, assets, matrix);
        write_file(f.matrix_out, csv.str());
    }
    write_file(f.svg, render_heatmap_svg(assets, matrix, order, is_corr));
}

std::string single_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"hrplab: hierarchical-clustering portfolio allocation and backtesting", "hrplab"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    std::string config_path;  // handled before parsing; declared for --help

    GenFlags gen;
    auto* gen_cmd = app.add_subcommand("gen", "Write a seeded synthetic returns/rf/factors dataset");
    gen_cmd->add_option("--assets", gen.spec.n_assets, "Number of assets")->capture_default_str();
    gen_cmd->add_option("--sectors", gen.spec.n_sectors, "Number of sectors")->capture_default_str();
    gen_cmd->add_option("--months", gen.spec.n_months, "Number of months")->capture_default_str();
    gen_cmd->add_option("--seed", gen.spec.seed, "RNG seed")->capture_default_str();
    gen_cmd->add_option("--start", gen.start, "First month YYYY-MM")->capture_default_str();
    gen_cmd->add_option("--beta-min", gen.spec.market_beta_range.lo)->capture_default_str();
    gen_cmd->add_option("--beta-max", gen.spec.market_beta_range.hi)->capture_default_str();
    gen_cmd->add_option("--loading-min", gen.spec.sector_loading_range.lo)->capture_default_str();
    gen_cmd->add_option("--loading-max", gen.spec.sector_loading_range.hi)->capture_default_str();
    gen_cmd->add_option("--market-vol", gen.spec.market_vol, "Monthly market factor volatility")->capture_default_str();
    gen_cmd->add_option("--sector-vol", gen.spec.sector_vol, "Monthly sector factor volatility")->capture_default_str();
    gen_cmd->add_option("--idio-vol", gen.spec.idio_vol, "Monthly idiosyncratic volatility")->capture_default_str();
    gen_cmd->add_option("--rf-rate", gen.spec.rf_const, "Constant monthly risk-free rate")->capture_default_str();
    gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
    gen_cmd->add_flag("--force", gen.force, "Overwrite existing files");

    AllocateFlags alloc;
    auto* alloc_cmd = app.add_subcommand("allocate", "Single-date allocation as JSON");
    alloc.data.add_to(alloc_cmd, true);
    alloc_cmd->add_option("--method", alloc.method, "hrp, gmv, tangency or equal")->capture_default_str();
    alloc_cmd->add_option("--sides", alloc.sides, "momentum, all_long or file:<path>")->capture_default_str();
    alloc_cmd->add_option("--out", alloc.out, "Output JSON path (default stdout)");

    BacktestFlags bt;
    auto* bt_cmd = app.add_subcommand("backtest", "Rolling buy-and-hold backtest; writes report JSON");
    bt_cmd->add_option("--returns", bt.returns, "Monthly returns CSV")->required();
    bt_cmd->add_option("--rf", bt.rf, "Risk-free CSV")->required();
    bt_cmd->add_option("--factors", bt.factors, "Factor CSV with mkt_rf")->required();
    bt_cmd->add_option("--methods", bt.methods, "Comma-separated: hrp,gmv,tangency,equal")->capture_default_str();
    bt_cmd->add_option("--lookback", bt.lookback, "Look-back months")->capture_default_str();
    bt_cmd->add_option("--hold", bt.hold, "Holding months per rebalance")->capture_default_str();
    bt_cmd->add_option("--sides", bt.sides, "momentum, all_long or file:<path>")->capture_default_str();
    bt_cmd->add_option("--shrink", bt.shrink, "Shrinkage intensity in [0, 1]")->capture_default_str();
    bt_cmd->add_option("--start", bt.start, "Earliest rebalance month YYYY-MM");
    bt_cmd->add_option("--end", bt.end, "Last evaluated month YYYY-MM");
    bt_cmd->add_option("--downturn-threshold", bt.downturn_threshold, "Downturn when mkt_rf < threshold")
        ->capture_default_str();
    bt_cmd->add_flag("--downturns-only", bt.downturns_only, "Report metrics for downturn months only");
    bt_cmd->add_option("--jobs", bt.jobs, "Worker threads (default: number of processors)");
    bt_cmd->add_option("--out", bt.out, "Output JSON path (default stdout)");

    ReportFlags rep;
    auto* rep_cmd = app.add_subcommand("report", "Render metrics from a backtest report");
    rep_cmd->add_option("--in", rep.in, "Report JSON")->required();
    rep_cmd->add_option("--format", rep.format, "table, csv or json")->capture_default_str();
    rep_cmd->add_flag("--market", rep.market, "Include the market benchmark rows");
    rep_cmd->add_option("--out", rep.out, "Output path (default stdout)");

    DendrogramFlags den;
    auto* den_cmd = app.add_subcommand("dendrogram", "Cluster one look-back window; write SVG and tree JSON");
    den.data.add_to(den_cmd, true);
    den_cmd->add_option("--svg", den.svg, "Output SVG path")->required();
    den_cmd->add_option("--json", den.json, "Output tree JSON path (default: SVG path with .json)");

    HeatmapFlags heat;
    auto* heat_cmd = app.add_subcommand("heatmap", "Correlation/covariance heatmap SVG");
    heat.data.add_to(heat_cmd, false);
    heat_cmd->add_option("--matrix", heat.matrix, "Matrix CSV instead of returns data");
    heat_cmd->add_option("--tree", heat.tree, "Tree JSON supplying the seriation for --matrix");
    heat_cmd->add_option("--order", heat.order, "original or seriated")->capture_default_str();
    heat_cmd->add_option("--kind", heat.kind, "corr or cov")->capture_default_str();
    heat_cmd->add_option("--svg", heat.svg, "Output SVG path")->required();
    heat_cmd->add_option("--matrix-out", heat.matrix_out, "Also write the plotted matrix as CSV");

    for (auto* sub : app.get_subcommands({})) {
        sub->add_option("--config", config_path, "key=value file mirroring the flags (flags win)");
    }

    try {
        // Splice --config contents in right after the subcommand name so that
        // explicit flags, which follow, take precedence.
        std::vector<std::string> args = raw_args;
        if (!args.empty()) {
            CLI::App* sub = app.get_subcommand_no_throw(args.front());
            if (sub != nullptr) {
                std::vector<std::string> rest;
                std::vector<std::string> injected;
                for (std::size_t i = 1; i < args.size(); ++i) {
                    std::string path;
                    if (args[i] == "--config") {
                        if (i + 1 >= args.size()) throw ValidationError("--config requires a path");
                        path = args[++i];
                    } else if (args[i].rfind("--config=", 0) == 0) {
                        path = args[i].substr(9);
                    } else {
                        rest.push_back(args[i]);
                        continue;
                    }
                    auto t = config_tokens(path, sub);
                    injected.insert(injected.end(), t.begin(), t.end());
                }
                args.assign(1, raw_args.front());
                args.insert(args.end(), injected.begin(), injected.end());
                args.insert(args.end(), rest.begin(), rest.end());
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << single_line(e.what()) << '\n';
        return 1;
    } catch (const Error& e) {
        err << "error: " << single_line(e.what()) << '\n';
        return e.exit_code();
    }

    try {
        if (gen_cmd->parsed()) {
            cmd_gen(gen);
        } else if (alloc_cmd->parsed()) {
            emit(alloc.out, cmd_allocate(alloc), out);
        } else if (bt_cmd->parsed()) {
            emit(bt.out, cmd_backtest(bt), out);
        } else if (rep_cmd->parsed()) {
            emit(rep.out, cmd_report(rep), out);
        } else if (den_cmd->parsed()) {
            cmd_dendrogram(den);
        } else if (heat_cmd->parsed()) {
            cmd_heatmap(heat);
        }
    } catch (const Error& e) {
        err << "error: " << single_line(e.what()) << '\n';
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "error: " << single_line(e.what()) << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << single_line(e.what()) << '\n';
        return 3;
    }
    return 0;
}

}  // namespace hrplab::cli
