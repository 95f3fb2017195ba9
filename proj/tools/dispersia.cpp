// dispersia: multipolar interaction energies, van der Waals coefficients,
// mountain-pass path experiments, and the semirelativistic spectral toolkit,
// behind one deterministic command-line interface.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "dispersia/bessel.hpp"
#include "dispersia/json_io.hpp"

namespace {

using namespace dispersia;

struct OutputOptions {
    std::string out;    // empty = stdout
    std::string format; // "json" or "csv"
};

void add_output_flags(CLI::App* cmd, OutputOptions& opts) {
    cmd->add_option("--out", opts.out, "output path (default stdout)");
    cmd->add_option("--format", opts.format, "json, or csv to also emit plot rows")
        ->check(CLI::IsMember({"json", "csv"}))
        ->default_val("json");
}

/// Writes the JSON result; with --format csv also writes (parameter,value)
/// rows to <out>.csv (or stdout when no --out was given).
void emit(const OutputOptions& opts, const json& result,
          const std::vector<std::pair<double, double>>& csv_rows = {},
          const std::string& csv_header = "parameter,value") {
    const std::string text = result.dump(2) + "\n";
    if (opts.out.empty()) std::cout << text;
    else write_file(opts.out, text);
    if (opts.format == "csv") {
        std::string csv = csv_header + "\n";
        char buf[64];
        for (const auto& [p, v] : csv_rows) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p, v);
            csv += buf;
        }
        if (opts.out.empty()) std::cout << csv;
        else write_file(opts.out + ".csv", csv);
    }
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t used = 0;
        out.push_back(std::stod(text.substr(pos), &used));
        pos += used;
        if (pos < text.size() && text[pos] == ',') ++pos;
    }
    return out;
}

Rotation rotation_flag(const std::string& text) {
    if (text.empty()) return Rotation::identity();
    const std::vector<double> v = parse_list(text);
    if (v.size() != 9) throw ValidationError("rotation flag needs 9 comma-separated entries");
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = v[3 * i + j];
    return Rotation(m);
}

// --- semirel experiments ------------------------------------------------------

json run_symbol_experiment(int n, double half_width) {
    const SpectralGrid grid = SpectralGrid::make(3, n, half_width);
    double worst = 0.0;
    for (const auto& [kx, ky, kz] :
         std::vector<std::array<int, 3>>{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {3, 1, 2}, {5, 4, 1}}) {
        ComplexField psi(grid.size());
        const double px = grid.momentum(kx), py = grid.momentum(ky), pz = grid.momentum(kz);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Eigen::Vector3d x = grid.point(i);
            const double phase = px * x(0) + py * x(1) + pz * x(2);
            psi[i] = std::complex<double>(std::cos(phase), std::sin(phase));
        }
        const ComplexField tpsi = apply_T(grid, psi);
        const double eig = std::sqrt(1.0 + px * px + py * py + pz * pz) - 1.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            worst = std::max(worst, std::abs(tpsi[i] - eig * psi[i]));
    }
    json j;
    j["experiment"] = "symbol";
    j["grid"] = n;
    j["max_plane_wave_error"] = worst;
    j["pass"] = worst <= 1e-12;
    return j;
}

json run_kernel_experiment(int n, std::vector<std::pair<double, double>>& csv) {
    json j;
    j["experiment"] = "kernel";
    {
        // separation-5 agreement between the kernel sum and the grid form
        const SpectralGrid grid = SpectralGrid::make(3, n, 26.0);
        const double sigma = 1.56, r0 = 9.17, c = 2.5 + r0;
        const RealField f = truncated_gaussian(grid, Eigen::Vector3d(-c, 0, 0), sigma, r0);
        const RealField g = truncated_gaussian(grid, Eigen::Vector3d(c, 0, 0), sigma, r0);
        const double kernel = kernel_form(grid, f, g, 5.0);
        const double fourier = inner(grid, f, apply_T(grid, g));
        j["separation"] = 5.0;
        j["kernel_value"] = kernel;
        j["fourier_value"] = fourier;
        j["relative_error"] = (kernel - fourier) / fourier;
        j["agreement_ok"] = std::abs(kernel - fourier) <= 0.01 * std::abs(fourier);
    }
    {
        const SpectralGrid grid = SpectralGrid::make(3, n, 15.0);
        const double sigma = 0.75, r0 = 4.25;
        std::vector<double> seps, logs;
        json sweep = json::array();
        for (double R : {4.0, 6.0, 8.0, 10.0}) {
            const double c = R / 2.0 + r0;
            const RealField f = truncated_gaussian(grid, Eigen::Vector3d(-c, 0, 0), sigma, r0);
            const RealField g = truncated_gaussian(grid, Eigen::Vector3d(c, 0, 0), sigma, r0);
            const double v = kernel_form(grid, f, g, R);
            sweep.push_back(json{{"R", R}, {"value", v}});
            csv.emplace_back(R, v);
            seps.push_back(R);
            logs.push_back(std::log(std::abs(v)));
        }
        const double rate = -fit_slope(seps, logs);
        j["sweep"] = std::move(sweep);
        j["fitted_decay_rate"] = rate;
        j["decay_ok"] = rate >= 0.9;
    }
    j["pass"] = j["agreement_ok"].get<bool>() && j["decay_ok"].get<bool>();
    return j;
}

json run_commutator_experiment(int n, std::uint64_t seed,
                               std::vector<std::pair<double, double>>& csv) {
    const SpectralGrid grid = SpectralGrid::make(1, n, 64.0);
    json j;
    j["experiment"] = "commutator";
    json sweep = json::array();
    double prev = 0.0;
    bool ratios_ok = true, bound_ok = true;
    double max_norm_times_R = 0.0;
    for (double R : {8.0, 16.0, 32.0, 64.0}) {
        const CutoffFunction zeta{R};
        const CommutatorEstimate est = commutator_norm(grid, zeta, 60, seed);
        const double bound = commutator_fourier_bound(grid, zeta);
        max_norm_times_R = std::max(max_norm_times_R, est.norm * R);
        json row{{"R", R}, {"estimate", est.norm}, {"fourier_bound", bound},
                 {"converged", est.converged}};
        if (prev > 0.0) {
            row["ratio"] = est.norm / prev;
            ratios_ok = ratios_ok && est.norm <= 0.6 * prev;
        }
        bound_ok = bound_ok && est.norm <= bound * (1.0 + 1e-8);
        sweep.push_back(std::move(row));
        csv.emplace_back(R, est.norm);
        prev = est.norm;
    }
    j["sweep"] = std::move(sweep);
    j["max_norm_times_R"] = max_norm_times_R;
    j["ratios_ok"] = ratios_ok;
    j["bound_ok"] = bound_ok;
    j["pass"] = ratios_ok && bound_ok;
    return j;
}

json run_ims_experiment(int n, std::vector<std::pair<double, double>>& csv) {
    const SpectralGrid grid = SpectralGrid::make(1, n, 256.0);
    json j;
    j["experiment"] = "ims";
    json sweep = json::array();
    double prev = 0.0;
    bool ratios_ok = true;
    for (double R : {8.0, 16.0, 32.0}) {
        const PartitionOfUnity part{R, Eigen::Vector3d(1.0, 0, 0)};
        RealField psi = gaussian_field(grid, Eigen::Vector3d(0.1125 * R, 0, 0), R / 32.0);
        const double nrm = std::sqrt(inner(grid, psi, psi));
        for (auto& x : psi) x /= nrm;
        const double err = std::abs(ims_error(grid, part, psi));
        json row{{"R", R}, {"abs_error", err}};
        if (prev > 0.0) {
            row["ratio"] = err / prev;
            ratios_ok = ratios_ok && err <= 0.7 * prev;
        }
        sweep.push_back(std::move(row));
        csv.emplace_back(R, err);
        prev = err;
    }
    j["sweep"] = std::move(sweep);
    j["pass"] = ratios_ok;
    return j;
}

json run_decay_experiment(int n, double half_width, std::uint64_t seed) {
    const SpectralGrid grid = SpectralGrid::make(3, n, half_width);
    const double a = 2.0 * grid.spacing();
    const RealField potential = smoothed_coulomb(grid, 1.0, a);
    const EigenResult solved = ground_state(grid, potential, 1, seed);
    const DecayFit fit =
        decay_rate(grid, solved.eigenvectors[0], 0.25 * half_width, solved.eigenvalues[0], 0.0);
    json j;
    j["experiment"] = "decay";
    j["grid"] = n;
    j["smoothing"] = a;
    j["ground_energy"] = solved.eigenvalues[0];
    j["residual"] = solved.residuals[0];
    j["fit"] = decay_fit_to_json(fit);
    j["pass"] = solved.eigenvalues[0] < 0.0 && fit.certified;
    return j;
}

json run_zhislin_experiment(int n, double half_width,
                            std::vector<std::pair<double, double>>& csv) {
    const SpectralGrid grid = SpectralGrid::make(3, n, half_width);
    const double a = 2.0 * grid.spacing();
    const std::vector<double> scales{24.0, 36.0, 54.0, 81.0};
    const ZhislinReport sweep = zhislin_trial_bound(grid, smoothed_coulomb(grid, 1.0, a), scales);
    const ZhislinReport multi = zhislin_trial_bound(grid, smoothed_coulomb(grid, 4.0, a), scales);
    for (std::size_t i = 0; i < scales.size(); ++i) csv.emplace_back(scales[i], sweep.values[i]);
    json j;
    j["experiment"] = "zhislin";
    j["grid"] = n;
    j["single_nucleus"] = zhislin_report_to_json(sweep);
    j["four_trials_Z4"] = zhislin_report_to_json(multi);
    j["pass"] = sweep.dips_below_floor && multi.all_span_negative;
    return j;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"dispersia: multipolar and van der Waals interaction toolkit"};
    app.name("dispersia");
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "seed for all randomized pieces")->default_val(0);

    // multipole
    auto* cmd_multipole = app.add_subcommand("multipole", "multipole tensor of a density");
    std::string density_path;
    int order = 1;
    OutputOptions mp_out;
    cmd_multipole->add_option("--density", density_path, "density file (.json or .csv)")
        ->required();
    cmd_multipole->add_option("--order", order, "tensor order 0..4")->required();
    add_output_flags(cmd_multipole, mp_out);

    // expand
    auto* cmd_expand = app.add_subcommand("expand", "expansion order verification");
    std::string rho1_path, rho2_path, L_list = "40,80,160,320", u_flag, v_flag;
    int K = 4;
    OutputOptions ex_out;
    cmd_expand->add_option("--rho1", rho1_path)->required();
    cmd_expand->add_option("--rho2", rho2_path)->required();
    cmd_expand->add_option("--K", K, "truncation order 2..6");
    cmd_expand->add_option("--L", L_list, "comma-separated separations");
    cmd_expand->add_option("--U", u_flag, "rotation of molecule 1, row-major 9-tuple");
    cmd_expand->add_option("--V", v_flag, "rotation of molecule 2, row-major 9-tuple");
    add_output_flags(cmd_expand, ex_out);

    // vdw
    auto* cmd_vdw = app.add_subcommand("vdw", "van der Waals coefficient of a toy pair");
    std::string mol1_path, mol2_path, vdw_u, vdw_v;
    int haar_samples = 0;
    OutputOptions vdw_out;
    cmd_vdw->add_option("--mol1", mol1_path)->required();
    cmd_vdw->add_option("--mol2", mol2_path)->required();
    cmd_vdw->add_option("--U", vdw_u);
    cmd_vdw->add_option("--V", vdw_v);
    cmd_vdw->add_option("--haar", haar_samples, "also sample this many Haar rotation pairs");
    add_output_flags(cmd_vdw, vdw_out);

    // mountainpass
    auto* cmd_mp = app.add_subcommand("mountainpass", "min-max level between two minima");
    std::string surface_path, tau0_path, tau1_path;
    int nodes = 64;
    OutputOptions mm_out;
    cmd_mp->add_option("--surface", surface_path)->required();
    cmd_mp->add_option("--tau0", tau0_path)->required();
    cmd_mp->add_option("--tau1", tau1_path)->required();
    cmd_mp->add_option("--nodes", nodes);
    add_output_flags(cmd_mp, mm_out);

    // boundpath
    auto* cmd_bp = app.add_subcommand("boundpath", "bounded min-max path construction");
    std::string bp_surface, bp_path;
    double L_cut = 0.0;
    OutputOptions bp_out;
    cmd_bp->add_option("--surface", bp_surface)->required();
    cmd_bp->add_option("--path", bp_path)->required();
    cmd_bp->add_option("--Lcut", L_cut)->required();
    add_output_flags(cmd_bp, bp_out);

    // pseudomin
    auto* cmd_pm = app.add_subcommand("pseudomin", "descent negativity experiment");
    int pm_n = 1, pm_m = 1, trials = 50;
    double pm_delta = 0.1;
    OutputOptions pm_out;
    cmd_pm->add_option("--n", pm_n);
    cmd_pm->add_option("--m", pm_m);
    cmd_pm->add_option("--delta", pm_delta);
    cmd_pm->add_option("--trials", trials);
    add_output_flags(cmd_pm, pm_out);

    // connectivity
    auto* cmd_conn = app.add_subcommand("connectivity", "sublevel connectivity experiment");
    int cn_n = 1, cn_m = 1, samples = 5000;
    double cn_delta = 0.1;
    OutputOptions cn_out;
    cmd_conn->add_option("--n", cn_n);
    cmd_conn->add_option("--m", cn_m);
    cmd_conn->add_option("--delta", cn_delta);
    cmd_conn->add_option("--samples", samples);
    add_output_flags(cmd_conn, cn_out);

    // semirel
    auto* cmd_sr = app.add_subcommand("semirel", "semirelativistic kinetic-operator experiments");
    std::string experiment;
    int sr_grid = 0;
    double sr_box = 0.0;
    OutputOptions sr_out;
    cmd_sr->add_option("--experiment", experiment)
        ->required()
        ->check(CLI::IsMember({"symbol", "kernel", "commutator", "ims", "decay", "zhislin"}));
    cmd_sr->add_option("--grid", sr_grid, "points per axis (power of two)");
    cmd_sr->add_option("--box", sr_box, "full box width");
    add_output_flags(cmd_sr, sr_out);

    CLI11_PARSE(app, argc, argv);

    bool pass = true;
    if (cmd_multipole->parsed()) {
        const ChargeDensity rho = load_density(density_path);
        const MultipoleTensor tensor = multipole_moment(rho, order);
        json j = multipole_to_json(tensor);
        j["label"] = rho.label;
        emit(mp_out, j);
    } else if (cmd_expand->parsed()) {
        const ChargeDensity rho1 = load_density(rho1_path);
        const ChargeDensity rho2 = load_density(rho2_path);
        const ExpansionReport report = verify_expansion_order(
            rho1, rho2, rotation_flag(u_flag), rotation_flag(v_flag), K, parse_list(L_list));
        std::vector<std::pair<double, double>> rows;
        for (std::size_t i = 0; i < report.L_values.size(); ++i)
            rows.emplace_back(report.L_values[i],
                              std::abs(report.exact[i] - report.truncated[i]));
        emit(ex_out, expansion_report_to_json(report), rows, "L,abs_remainder");
        pass = report.order_ok || report.machine_precision;
    } else if (cmd_vdw->parsed()) {
        const ToyMolecule mol1 = toy_molecule_from_json(json::parse(read_file(mol1_path)));
        const ToyMolecule mol2 = toy_molecule_from_json(json::parse(read_file(mol2_path)));
        const VdwResult at = vdw_coefficient(mol1, mol2, rotation_flag(vdw_u),
                                             rotation_flag(vdw_v));
        json j;
        j["C_vdW"] = at.c_max;
        j["gap"] = at.gap;
        json phi = json::array();
        for (Eigen::Index i = 0; i < at.phi.size(); ++i)
            phi.push_back(json::array({at.phi(i).real(), at.phi(i).imag()}));
        j["phi"] = std::move(phi);
        if (haar_samples > 0) {
            json values = json::array();
            for (const auto& [U, V] : sample_so3_pairs(haar_samples, seed))
                values.push_back(vdw_coefficient(mol1, mol2, U, V).c_max);
            j["haar_values"] = std::move(values);
        }
        emit(vdw_out, j);
        pass = at.c_max > 1e-12;
    } else if (cmd_mp->parsed()) {
        const EnergySurface surface = energy_surface_from_json(json::parse(read_file(surface_path)));
        const Configuration tau0 = configuration_from_json(json::parse(read_file(tau0_path)));
        const Configuration tau1 = configuration_from_json(json::parse(read_file(tau1_path)));
        const MinMaxResult result =
            minmax_optimize(make_surface_function(surface), tau0, tau1, nodes, seed);
        emit(mm_out, minmax_result_to_json(result));
        pass = result.converged;
    } else if (cmd_bp->parsed()) {
        const EnergySurface surface = energy_surface_from_json(json::parse(read_file(bp_surface)));
        const PathOnConfigSpace path = path_from_json(json::parse(read_file(bp_path)));
        const BoundedPathResult result = bounded_minmax_path(surface, path, L_cut, seed);
        emit(bp_out, bounded_path_result_to_json(result));
        pass = result.status == "ok" || result.status == "already_bounded" ||
               result.status == "vdw_dominated";
    } else if (cmd_pm->parsed()) {
        const NegativityReport report = negativity_at_pseudomin(pm_n, pm_m, pm_delta, trials, seed);
        emit(pm_out, negativity_report_to_json(report));
        pass = report.pass;
    } else if (cmd_conn->parsed()) {
        const ConnectivityReport report = sublevel_connectivity(cn_n, cn_m, cn_delta, samples, seed);
        emit(cn_out, connectivity_report_to_json(report));
        pass = report.pass;
    } else if (cmd_sr->parsed()) {
        std::vector<std::pair<double, double>> csv;
        json j;
        if (experiment == "symbol") {
            j = run_symbol_experiment(sr_grid ? sr_grid : 16, sr_box > 0 ? sr_box / 2 : 8.0);
        } else if (experiment == "kernel") {
            j = run_kernel_experiment(sr_grid ? sr_grid : 64, csv);
        } else if (experiment == "commutator") {
            j = run_commutator_experiment(sr_grid ? sr_grid : 8192, seed, csv);
        } else if (experiment == "ims") {
            j = run_ims_experiment(sr_grid ? sr_grid : 8192, csv);
        } else if (experiment == "decay") {
            j = run_decay_experiment(sr_grid ? sr_grid : 64, sr_box > 0 ? sr_box / 2 : 16.0, seed);
        } else {
            j = run_zhislin_experiment(sr_grid ? sr_grid : 128, sr_box > 0 ? sr_box / 2 : 160.0,
                                       csv);
        }
        j["seed"] = seed;
        emit(sr_out, j, csv, "R,value");
        pass = j["pass"].get<bool>();
    }
    return pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
