// mwfock: batch driver for the A_{p,r} sweep, projection-norm bounds,
// property suites and plots.
//
// Exit codes: 0 success, 1 usage/parse/invalid input, 2 region too small,
// 3 verification failures.

#include <CLI11.hpp>

#include <mwfock/mwfock.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "svg.hpp"

namespace fs = std::filesystem;
using namespace mwfock;

namespace {

struct RunConfig {
    std::string weight;
    double p = 2.0;
    double alpha = 1.0;
    double r = 1.0;
    std::optional<double> region;
    std::optional<double> step;
    int resolution = 8;
    std::uint64_t seed = 42;
    std::string out = ".";
    int threads = 0;

    // verify
    std::string suite = "all";
    std::optional<int> size;
    std::optional<double> tolerance;

    // plot
    std::string csv;
    std::string convergence;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path out_dir(const RunConfig& c)
{
    fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw UsageError("cannot create output directory '" + c.out + "': " + ec.message());
    return dir;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream os(path);
    if (!os)
        throw UsageError("cannot write '" + path.string() + "'");
    return os;
}

void write_json(const fs::path& path, const json& j)
{
    auto os = open_out(path);
    os << j.dump(2) << "\n";
}

double region_of(const RunConfig& c) { return c.region.value_or(2.0 * c.r); }

int cmd_apr(const RunConfig& c)
{
    const auto w = load_weight(c.weight);
    AprOptions opts;
    opts.threads = c.threads;
    const auto rep = apr_constant(w, c.p, c.r, region_of(c), c.step.value_or(c.r), c.resolution, opts);
    const auto dir = out_dir(c);
    {
        auto os = open_out(dir / "apr_cubes.csv");
        write_apr_csv(os, rep);
    }
    const auto summary = apr_summary(rep, w);
    write_json(dir / "apr_summary.json", summary);
    std::cout << "apr_direct     " << fmt17(rep.apr_direct) << "\n"
              << "sandwich_sup   " << fmt17(rep.sandwich_sup) << "\n"
              << "apr_interval   [" << fmt17(rep.apr_interval[0]) << ", " << fmt17(rep.apr_interval[1]) << "]\n"
              << "cubes          " << rep.per_cube.size() << (rep.collapsed ? " (one period)" : "") << "\n";
    return 0;
}

struct Bounds {
    double lower_formula, lower_estimate, exact, upper;
};

Bounds projnorm_bounds(const WeightSpec& w, const RunConfig& c, double step, int resolution, double apr)
{
    const double region = region_of(c);
    const auto grid = make_grid(w.ambient(), c.alpha, std::max(6.0 / std::sqrt(c.alpha), 2.0 * region), step);
    LowerBoundOptions lo;
    lo.seed = c.seed;
    Bounds b{};
    b.lower_formula = theorem_lower_bound(std::max(1.0, apr), c.alpha, c.p, c.r, w.ambient());
    b.lower_estimate = projection_norm_lower(w, c.p, c.alpha, c.r, grid, sweep_centers(w, region, c.r).centers, lo);
    b.exact = c.p == 2.0 ? projection_norm_p2(w, c.alpha, *grid) : std::numeric_limits<double>::quiet_NaN();
    b.upper = maximal_upper_bound(w, c.p, c.alpha, c.r, region, resolution);
    return b;
}

int cmd_projnorm(const RunConfig& c)
{
    const auto w = load_weight(c.weight);
    AprOptions ao;
    ao.sandwich = false;
    ao.threads = c.threads;
    const double apr = apr_constant(w, c.p, c.r, region_of(c), c.r, c.resolution, ao).apr_direct;
    const double step = c.step.value_or(std::min(0.1, c.r / 10.0));

    const auto dir = out_dir(c);
    const std::string header = "lower_formula,lower_estimate,exact,constructive_upper";
    const auto b = projnorm_bounds(w, c, step, c.resolution, apr);
    {
        auto os = open_out(dir / "projnorm_bounds.csv");
        os << header << "\n"
           << fmt17(b.lower_formula) << "," << fmt17(b.lower_estimate) << "," << fmt17(b.exact) << ","
           << fmt17(b.upper) << "\n";
    }
    write_json(dir / "projnorm_summary.json", {{"schema_version", schema_version},
                                               {"command", "projnorm"},
                                               {"weight", weight_to_json(w)},
                                               {"p", c.p},
                                               {"alpha", c.alpha},
                                               {"r", c.r},
                                               {"region", region_of(c)},
                                               {"step", step},
                                               {"resolution", c.resolution},
                                               {"apr_direct", json_number(apr)},
                                               {"lower_formula", json_number(b.lower_formula)},
                                               {"lower_estimate", json_number(b.lower_estimate)},
                                               {"exact", json_number(b.exact)},
                                               {"constructive_upper", json_number(b.upper)}});

    // coarser grids and resolutions for the convergence plot
    {
        auto os = open_out(dir / "projnorm_convergence.csv");
        os << "resolution,step," << header << "\n";
        for (int level = 2; level >= 0; --level) {
            const int res = std::max(4, c.resolution >> level);
            const double h = step * (1 << level);
            const auto bl = level == 0 ? b : projnorm_bounds(w, c, h, res, apr);
            os << res << "," << fmt17(h) << "," << fmt17(bl.lower_formula) << "," << fmt17(bl.lower_estimate) << ","
               << fmt17(bl.exact) << "," << fmt17(bl.upper) << "\n";
        }
    }

    std::printf("%-16s %-16s %-16s %-16s\n", "lower_formula", "lower_estimate", "exact", "constructive_upper");
    const std::string exact = std::isfinite(b.exact) ? svg::num(b.exact) : "-";
    std::printf("%-16s %-16s %-16s %-16s\n", svg::num(b.lower_formula).c_str(), svg::num(b.lower_estimate).c_str(),
                exact.c_str(), svg::num(b.upper).c_str());
    return 0;
}

int cmd_verify(const RunConfig& c)
{
    std::vector<Suite> suites;
    if (c.suite == "all") {
        suites = all_suites();
    } else {
        std::stringstream ss(c.suite);
        std::string name;
        while (std::getline(ss, name, ','))
            suites.push_back(suite_from_string(name));
    }
    VerifyOptions opts;
    opts.threads = c.threads;
    opts.tolerance = c.tolerance;

    std::vector<SuiteReport> reports;
    std::size_t failures = 0;
    for (auto s : suites) {
        reports.push_back(run_suite(s, c.seed, c.size.value_or(default_suite_size(s)), opts));
        failures += reports.back().failures.size();
    }
    const auto dir = out_dir(c);
    write_json(dir / "verify_report.json", verify_document(c.seed, reports));
    const auto table = to_table(reports);
    open_out(dir / "verify_table.txt") << table;
    std::cout << table;
    for (const auto& r : reports)
        for (const auto& f : r.failures)
            std::cerr << r.suite << " case " << f.case_index << ": " << f.label << " (" << f.message
                      << "), repro " << f.repro.dump() << "\n";
    return failures == 0 ? 0 : 3;
}

CsvTable load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidSpec("cannot open CSV '" + path + "'");
    try {
        return read_csv(in);
    } catch (const InvalidSpec& e) {
        throw InvalidSpec("'" + path + "': " + e.what());
    }
}

/// Smallest positive gap between distinct values, or 1.
double spacing(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    double gap = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] - v[i - 1] > 1e-12 && (gap == 0.0 || v[i] - v[i - 1] < gap))
            gap = v[i] - v[i - 1];
    return gap > 0.0 ? gap : 1.0;
}

int cmd_plot(const RunConfig& c)
{
    const fs::path base(c.out);
    const std::string csv = c.csv.empty() ? (base / "apr_cubes.csv").string() : c.csv;
    const auto t = load_csv(csv);
    const int ix = t.column(t.column("center_x") >= 0 ? "center_x" : "center_x1");
    const int iy = t.column(t.column("center_y") >= 0 ? "center_y" : "center_y1");
    const int iv = t.column("direct_ratio");
    if (ix < 0 || iy < 0 || iv < 0)
        throw InvalidSpec("'" + csv + "' lacks center_x, center_y or direct_ratio columns");

    // collapse higher coordinates by taking the max over cells sharing (x, y)
    std::map<std::pair<double, double>, double> cells;
    std::vector<double> xs, ys;
    for (const auto& row : t.rows) {
        auto [it, fresh] = cells.try_emplace({row[ix], row[iy]}, row[iv]);
        if (!fresh)
            it->second = std::max(it->second, row[iv]);
        xs.push_back(row[ix]);
        ys.push_back(row[iy]);
    }
    std::vector<svg::Cell> list;
    for (const auto& [k, v] : cells)
        list.push_back({k.first, k.second, v});

    const auto dir = out_dir(c);
    {
        auto os = open_out(dir / "apr_heatmap.svg");
        svg::heatmap(os, list, std::min(spacing(xs), spacing(ys)), "per-cube direct ratio");
    }
    std::cout << "wrote " << (dir / "apr_heatmap.svg").string() << "\n";

    std::string conv = c.convergence;
    if (conv.empty() && fs::exists(base / "projnorm_convergence.csv"))
        conv = (base / "projnorm_convergence.csv").string();
    if (!conv.empty()) {
        const auto ct = load_csv(conv);
        const int ir = ct.column("resolution");
        if (ir < 0)
            throw InvalidSpec("'" + conv + "' lacks a resolution column");
        std::vector<svg::Series> series;
        for (std::size_t k = 0; k < ct.header.size(); ++k) {
            if (static_cast<int>(k) == ir || ct.header[k] == "step")
                continue;
            svg::Series s{ct.header[k], {}, {}};
            for (const auto& row : ct.rows) {
                s.x.push_back(row[ir]);
                s.y.push_back(row[k]);
            }
            series.push_back(std::move(s));
        }
        auto os = open_out(dir / "convergence.svg");
        svg::line_chart(os, series, "resolution", "norm bounds against resolution");
        std::cout << "wrote " << (dir / "convergence.svg").string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Matrix-weighted Fock projection toolkit"};
    app.require_subcommand(1);
    RunConfig c;

    auto common = [&](CLI::App* sub, bool weight) {
        if (weight)
            sub->add_option("--weight", c.weight, "weight spec JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--p", c.p, "exponent p >= 1")->check(CLI::Range(1.0, 1e6));
        sub->add_option("--r", c.r, "cube side r > 0")->check(CLI::PositiveNumber);
        sub->add_option("--region", c.region, "sweep half-width (default 2r)")->check(CLI::PositiveNumber);
        sub->add_option("--resolution", c.resolution, "quadrature points per axis, >= 4")
            ->check(CLI::Range(4, 1 << 20));
        sub->add_option("--seed", c.seed, "base seed");
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--threads", c.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    };

    auto* apr = app.add_subcommand("apr", "sweep A_{p,r} over lattice cubes; writes apr_cubes.csv, apr_summary.json");
    common(apr, true);
    apr->add_option("--step", c.step, "lattice step in (0, r] (default r)")->check(CLI::PositiveNumber);
    apr->add_option("--alpha", c.alpha, "unused; accepted for uniformity")->check(CLI::PositiveNumber);

    auto* proj = app.add_subcommand("projnorm", "bounds on |P_alpha| in L^p_{alpha,W}; writes projnorm_*.csv/json");
    common(proj, true);
    proj->add_option("--alpha", c.alpha, "Gaussian parameter alpha > 0")->check(CLI::PositiveNumber);
    proj->add_option("--step", c.step, "quadrature grid step (default min(0.1, r/10))")->check(CLI::PositiveNumber);

    auto* ver = app.add_subcommand("verify", "seeded property suites; writes verify_report.json, verify_table.txt");
    common(ver, false);
    ver->add_option("--suite", c.suite, "all, or comma-separated suite names");
    ver->add_option("--size", c.size, "cases per suite (default per suite)")->check(CLI::NonNegativeNumber);
    ver->add_option("--tolerance", c.tolerance, "override every check tolerance")->check(CLI::NonNegativeNumber);

    auto* plot = app.add_subcommand("plot", "SVG heatmap and convergence curves from earlier CSV output");
    plot->add_option("--csv", c.csv, "per-cube CSV (default <out>/apr_cubes.csv)");
    plot->add_option("--convergence", c.convergence, "convergence CSV (default <out>/projnorm_convergence.csv)");
    plot->add_option("--out", c.out, "directory for inputs and SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (apr->parsed())
            return cmd_apr(c);
        if (proj->parsed())
            return cmd_projnorm(c);
        if (ver->parsed())
            return cmd_verify(c);
        return cmd_plot(c);
    } catch (const RegionTooSmall& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
