// tfbm: simulation and convergence experiments for the tempered fBm rough path lift.

#include "tfbm/tfbm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::vector<double> hurst;
    std::vector<double> lambda;
    std::vector<std::size_t> resolutions;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> mc;
    std::optional<std::size_t> paths;
    std::optional<double> horizon;
    std::optional<int> dim;
    std::optional<int> depth;
    std::optional<int> max_depth;
    std::optional<double> rho;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool fast = false;
    bool binary = false;
};

tfbm::ExperimentConfig make_config(tfbm::Experiment e, const Flags& f) {
    auto c = tfbm::ExperimentConfig::defaults(e);
    if (!f.hurst.empty()) c.hurst = f.hurst;
    if (!f.lambda.empty()) c.lambda = f.lambda;
    if (!f.resolutions.empty()) c.resolutions = f.resolutions;
    if (f.steps) c.steps = *f.steps;
    if (f.paths) c.n_paths = *f.paths;
    if (f.horizon) c.horizon = *f.horizon;
    if (f.dim) c.dim = *f.dim;
    if (f.depth) c.depth = *f.depth;
    if (f.max_depth) c.max_depth = *f.max_depth;
    if (f.rho) c.rho = *f.rho;
    if (f.seed) c.seed = *f.seed;
    if (f.fast) c.apply_fast();
    if (f.mc) c.n_mc = *f.mc;
    c.output = f.out;
    c.binary = f.binary;
    return c;
}

/// Main output: the --out file, or stdout.
class Output {
public:
    explicit Output(const std::string& path, bool binary = false) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
            if (!*file_) throw std::runtime_error("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

/// `<dir>/<stem>_<suffix>.csv` next to --out; empty without --out.
std::string sidecar(const std::string& out, const std::string& suffix) {
    if (out.empty()) return {};
    const std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + "_" + suffix + ".csv")).string();
}

template <class Writer>
void write_sidecar(const std::string& path, const std::string& what, Writer&& w) {
    if (path.empty()) {
        std::cerr << "note: " << what << " not written (requires --out)\n";
        return;
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    w(os);
    std::cerr << what << " -> " << path << '\n';
}

void print_slopes(const tfbm::ConvergenceTable& t) {
    for (const auto& s : t.slopes)
        std::cerr << "H=" << s.hurst << " lambda=" << s.lambda << "  slope=" << s.fit.slope << " +- "
                  << s.fit.slope_stderr << "  (theory " << s.theoretical << ")\n";
}

int run(tfbm::Experiment e, const Flags& f) {
    const auto c = make_config(e, f);
    c.validate();
    switch (e) {
        case tfbm::Experiment::simulate: {
            const double h = c.hurst.front(), l = c.lambda.front();
            const auto batch = tfbm::simulate_paths(c.model(h, l), c.steps, c.n_paths, tfbm::RngSpec{c.seed, 0});
            if (batch.meta.fell_back) std::cerr << "warning: " << batch.meta.warning << '\n';
            Output out(c.output, c.binary);
            if (c.binary) {
                for (const auto& p : batch.paths) tfbm::write_path_binary(out.stream(), p);
            } else if (batch.paths.size() == 1) {
                tfbm::write_config_echo(out.stream(), c);
                tfbm::write_path_csv(out.stream(), batch.paths.front());
            } else {
                auto& os = out.stream();
                tfbm::write_config_echo(os, c);
                os << "path_id,t";
                for (int k = 0; k < c.dim; ++k) os << ",comp" << k;
                os << '\n';
                os.precision(17);
                for (std::size_t id = 0; id < batch.paths.size(); ++id) {
                    const auto& p = batch.paths[id];
                    for (std::size_t i = 0; i < p.points(); ++i) {
                        os << id << ',' << p.partition()[i];
                        for (int k = 0; k < p.dim(); ++k) os << ',' << p.values()(static_cast<Eigen::Index>(i), k);
                        os << '\n';
                    }
                }
            }
            return 0;
        }
        case tfbm::Experiment::levy_convergence: {
            const auto t = tfbm::run_levy_convergence(c);
            Output out(c.output);
            tfbm::write_levy_csv(out.stream(), c, t);
            print_slopes(t);
            return 0;
        }
        case tfbm::Experiment::milstein_convergence: {
            const auto t = tfbm::run_milstein_convergence(c);
            Output out(c.output);
            tfbm::write_milstein_csv(out.stream(), c, t);
            print_slopes(t);
            const auto traj = tfbm::run_milstein_trajectory(c);
            write_sidecar(sidecar(c.output, "trajectory"), "trajectory",
                          [&](std::ostream& os) { tfbm::write_trajectory_csv(os, c, traj); });
            return 0;
        }
        case tfbm::Experiment::signature_features: {
            const auto feats = tfbm::run_signature_features(c);
            Output out(c.output);
            tfbm::write_signature_features_csv(out.stream(), c, feats);
            write_sidecar(sidecar(c.output, "moments"), "moments",
                          [&](std::ostream& os) { tfbm::write_signature_moments_csv(os, c, feats); });
            if (c.depth > 2)
                write_sidecar(sidecar(c.output, "signature"), "signature dump",
                              [&](std::ostream& os) { tfbm::write_signature_dump_csv(os, c, feats); });
            return 0;
        }
        case tfbm::Experiment::covariance_check: {
            const auto chk = tfbm::run_covariance_check(c);
            Output out(c.output);
            tfbm::write_covariance_check_csv(out.stream(), c, chk);
            write_sidecar(sidecar(c.output, "rho"), "rho-variation table",
                          [&](std::ostream& os) { tfbm::write_rho_variation_csv(os, c, chk.rho_variation); });
            std::cerr << "decomposition bound violations: " << chk.total_violations() << '\n';
            for (const auto& d : chk.decomposition)
                if (!d.report.ok())
                    std::cerr << "  H=" << d.hurst << " lambda=" << d.lambda << ": " << d.report.violations.size()
                              << " of " << d.report.pairs_checked << " pairs\n";
            return 0;
        }
        case tfbm::Experiment::rho_variation: {
            const auto rows = tfbm::run_rho_variation(c);
            Output out(c.output);
            tfbm::write_rho_variation_csv(out.stream(), c, rows);
            for (const auto& r : rows)
                std::cerr << "H=" << r.hurst << " lambda=" << r.lambda << " rho=" << r.sweep.rho
                          << "  sup=" << r.sweep.running_sup.back() << "  growth=" << r.sweep.final_relative_growth()
                          << "  bound=" << r.bound << '\n';
            return 0;
        }
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempered fractional Brownian motion: simulation, rough path lift, convergence experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Config file (TOML/INI); command-line flags take precedence");

    Flags f;
    app.add_option("--hurst", f.hurst, "Hurst parameter(s) H in (0,1)")->delimiter(',');
    app.add_option("--lambda", f.lambda, "Tempering parameter(s) lambda > 0")->delimiter(',');
    app.add_option("--resolutions", f.resolutions, "Grid sizes (powers of two, increasing)")->delimiter(',');
    app.add_option("-N,--steps", f.steps, "Number of grid intervals");
    app.add_option("--mc", f.mc, "Monte Carlo replicas");
    app.add_option("--paths", f.paths, "Number of paths (simulate, signature-features)");
    app.add_option("--horizon", f.horizon, "Time horizon T");
    app.add_option("--dim", f.dim, "Path dimension");
    app.add_option("--depth", f.depth, "Signature truncation depth");
    app.add_option("--max-depth", f.max_depth, "Deepest dyadic level for rho-variation");
    app.add_option("--rho", f.rho, "Variation index (default max(1, 1/(2H)))");
    app.add_option("--seed", f.seed, "Base seed");
    app.add_option("--out", f.out, "Output file (default stdout)");
    app.add_flag("--fast", f.fast, "Reduced Monte Carlo size (200 replicas)");
    app.add_flag("--binary", f.binary, "simulate: raw little-endian float64 output");

    const std::vector<std::pair<tfbm::Experiment, std::string>> commands = {
        {tfbm::Experiment::simulate, "Simulate tfBm sample paths"},
        {tfbm::Experiment::levy_convergence, "Refinement error of the Levy area"},
        {tfbm::Experiment::milstein_convergence, "Strong error of the Milstein scheme"},
        {tfbm::Experiment::signature_features, "First two signature levels of simulated paths"},
        {tfbm::Experiment::covariance_check, "Covariance decomposition bounds and rho-variation"},
        {tfbm::Experiment::rho_variation, "Dyadic rho-variation sweep"},
    };
    std::vector<std::pair<CLI::App*, tfbm::Experiment>> subs;
    for (const auto& [e, help] : commands) subs.emplace_back(app.add_subcommand(std::string(tfbm::experiment_name(e)), help), e);

    CLI11_PARSE(app, argc, argv);
    try {
        for (const auto& [sub, e] : subs)
            if (sub->parsed()) return run(e, f);
    } catch (const tfbm::DomainError& ex) {
        std::cerr << "invalid configuration: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 1;
}
