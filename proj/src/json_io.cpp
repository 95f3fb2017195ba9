#include "dispersia/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace dispersia {

namespace {

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json complex_to_json(const std::complex<double>& z) { return json::array({z.real(), z.imag()}); }

std::complex<double> complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
    throw ValidationError("expected a number or an [re, im] pair");
}

json cmatrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXcd cmatrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ValidationError("expected a matrix as array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols)
            throw ValidationError("ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
    }
    return m;
}

} // namespace

json density_to_json(const ChargeDensity& rho) {
    json j;
    j["label"] = rho.label;
    json pts = json::array();
    for (const auto& p : rho.points) pts.push_back(vec3_to_json(p));
    j["points"] = std::move(pts);
    j["weights"] = rho.weights;
    return j;
}

ChargeDensity density_from_json(const json& j) {
    if (!j.contains("points") || !j.contains("weights"))
        throw ValidationError("density JSON needs 'points' and 'weights'");
    std::vector<Eigen::Vector3d> pts;
    for (const auto& p : j.at("points")) pts.push_back(vec3_from_json(p));
    std::vector<double> ws = j.at("weights").get<std::vector<double>>();
    if (pts.size() != ws.size())
        throw ValidationError("density JSON: points and weights lengths differ");
    return ChargeDensity(std::move(pts), std::move(ws), j.value("label", ""));
}

ChargeDensity density_from_csv(const std::string& text, const std::string& label) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("density CSV: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,z,w") throw ValidationError("density CSV: header must be exactly 'x,y,z,w'");
    std::vector<Eigen::Vector3d> pts;
    std::vector<double> ws;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        double vals[4];
        std::string cell;
        for (int c = 0; c < 4; ++c) {
            if (!std::getline(row, cell, ','))
                throw ValidationError("density CSV: line " + std::to_string(lineno) +
                                      " has fewer than 4 fields");
            std::size_t used = 0;
            try {
                vals[c] = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = std::string::npos;
            }
            if (used != cell.size())
                throw ValidationError("density CSV: bad number in field " + std::to_string(c + 1) +
                                      " at line " + std::to_string(lineno));
        }
        if (std::getline(row, cell, ','))
            throw ValidationError("density CSV: line " + std::to_string(lineno) +
                                  " has more than 4 fields");
        pts.emplace_back(vals[0], vals[1], vals[2]);
        ws.push_back(vals[3]);
    }
    return ChargeDensity(std::move(pts), std::move(ws), label);
}

std::string density_to_csv(const ChargeDensity& rho) {
    std::ostringstream out;
    out.precision(17);
    out << "x,y,z,w\n";
    for (std::size_t i = 0; i < rho.size(); ++i)
        out << rho.points[i].x() << ',' << rho.points[i].y() << ',' << rho.points[i].z() << ','
            << rho.weights[i] << '\n';
    return out.str();
}

ChargeDensity load_density(const std::string& path) {
    const std::string text = read_file(path);
    const std::string stem = std::filesystem::path(path).stem().string();
    if (std::filesystem::path(path).extension() == ".csv") return density_from_csv(text, stem);
    json j = json::parse(text);
    ChargeDensity rho = density_from_json(j);
    if (rho.label.empty()) rho.label = stem;
    return rho;
}

void save_density(const ChargeDensity& rho, const std::string& path) {
    if (std::filesystem::path(path).extension() == ".csv") {
        write_file(path, density_to_csv(rho));
    } else {
        write_file(path, density_to_json(rho).dump(2) + "\n");
    }
}

json rotation_to_json(const Rotation& r) {
    json out = json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out.push_back(r.matrix()(i, j));
    return out;
}

Rotation rotation_from_json(const json& j) {
    if (!j.is_array() || j.size() != 9)
        throw ValidationError("rotation JSON must be a row-major 9-tuple");
    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) m(i, c) = j[3 * i + c].get<double>();
    return Rotation(m);
}

json configuration_to_json(const Configuration& tau) {
    json j;
    j["L"] = tau.L;
    j["U"] = rotation_to_json(tau.U);
    j["V"] = rotation_to_json(tau.V);
    return j;
}

Configuration configuration_from_json(const json& j) {
    return Configuration(j.at("L").get<double>(), rotation_from_json(j.at("U")),
                         rotation_from_json(j.at("V")));
}

json path_to_json(const PathOnConfigSpace& path) {
    json j;
    j["interpolation"] = "geodesic";
    json nodes = json::array();
    for (const auto& nd : path.nodes) nodes.push_back(configuration_to_json(nd));
    j["nodes"] = std::move(nodes);
    return j;
}

PathOnConfigSpace path_from_json(const json& j) {
    if (j.value("interpolation", "geodesic") != std::string("geodesic"))
        throw ValidationError("path JSON: only geodesic interpolation is supported");
    std::vector<Configuration> nodes;
    for (const auto& nd : j.at("nodes")) nodes.push_back(configuration_from_json(nd));
    return PathOnConfigSpace(std::move(nodes));
}

json toy_molecule_to_json(const ToyMolecule& mol) {
    json j;
    j["H"] = cmatrix_to_json(mol.hamiltonian);
    j["Dx"] = cmatrix_to_json(mol.dipole_ops[0]);
    j["Dy"] = cmatrix_to_json(mol.dipole_ops[1]);
    j["Dz"] = cmatrix_to_json(mol.dipole_ops[2]);
    return j;
}

ToyMolecule toy_molecule_from_json(const json& j) {
    return ToyMolecule::build(cmatrix_from_json(j.at("H")),
                              {cmatrix_from_json(j.at("Dx")), cmatrix_from_json(j.at("Dy")),
                               cmatrix_from_json(j.at("Dz"))});
}

json energy_surface_to_json(const EnergySurface& surface) {
    json j;
    j["rho1"] = density_to_json(surface.rho1);
    j["rho2"] = density_to_json(surface.rho2);
    j["E_infinity"] = surface.E_infinity;
    j["L_min"] = surface.L_min;
    json orders = json::array();
    for (const auto& [n, m] : surface.orders) orders.push_back(json::array({n, m}));
    j["orders"] = std::move(orders);
    if (std::holds_alternative<double>(surface.vdw)) {
        j["vdw"] = json{{"constant", std::get<double>(surface.vdw)}};
    } else {
        const auto& [m1, m2] = std::get<std::pair<ToyMolecule, ToyMolecule>>(surface.vdw);
        j["vdw"] = json{{"mol1", toy_molecule_to_json(m1)}, {"mol2", toy_molecule_to_json(m2)}};
    }
    return j;
}

EnergySurface energy_surface_from_json(const json& j) {
    EnergySurface surface{density_from_json(j.at("rho1")), density_from_json(j.at("rho2"))};
    surface.E_infinity = j.value("E_infinity", 0.0);
    surface.L_min = j.value("L_min", 1.0);
    for (const auto& o : j.at("orders")) {
        if (!o.is_array() || o.size() != 2)
            throw ValidationError("surface JSON: orders must be [n,m] pairs");
        surface.orders.emplace_back(o[0].get<int>(), o[1].get<int>());
    }
    const json& v = j.at("vdw");
    if (v.contains("constant")) {
        surface.vdw = v.at("constant").get<double>();
    } else {
        surface.vdw = std::make_pair(toy_molecule_from_json(v.at("mol1")),
                                     toy_molecule_from_json(v.at("mol2")));
    }
    surface.validate();
    return surface;
}

json multipole_to_json(const MultipoleTensor& tensor) {
    json entries = json::object();
    for (const auto& [idx, val] : tensor.entries()) {
        std::string key;
        for (int i : idx) key += static_cast<char>('0' + i);
        entries[key] = val;
    }
    return json{{"order", tensor.order()}, {"entries", std::move(entries)}};
}

json expansion_report_to_json(const ExpansionReport& report) {
    json j;
    j["L_values"] = report.L_values;
    j["exact"] = report.exact;
    j["truncated"] = report.truncated;
    j["K"] = report.K;
    j["slope_threshold"] = report.slope_threshold;
    j["order_ok"] = report.order_ok;
    j["machine_precision"] = report.machine_precision;
    j["hypothesis_violation"] = report.hypothesis_violation;
    if (report.fitted_slope) j["fitted_slope"] = *report.fitted_slope;
    else j["fitted_slope"] = nullptr;
    return j;
}

json minmax_result_to_json(const MinMaxResult& result) {
    json j;
    j["level"] = result.level;
    j["argmax_t"] = result.argmax_t;
    j["iterations"] = result.iterations;
    j["converged"] = result.converged;
    j["path"] = path_to_json(result.path);
    return j;
}

json bounded_path_result_to_json(const BoundedPathResult& result) {
    json j;
    j["status"] = result.status;
    j["changed"] = result.changed;
    j["vdw_dominated"] = result.vdw_dominated;
    j["L_cut"] = result.L_cut;
    j["input_max"] = result.input_max;
    j["output_max"] = result.output_max;
    j["delta_initial"] = result.delta_initial;
    j["delta_used"] = result.delta_used;
    j["path"] = path_to_json(result.path);
    return j;
}

json negativity_report_to_json(const NegativityReport& report) {
    json j;
    j["n"] = report.n;
    j["m"] = report.m;
    j["delta"] = report.delta;
    j["trials"] = report.trials;
    j["endpoint_values"] = report.endpoint_values;
    j["min_endpoint"] = report.min_endpoint;
    j["max_endpoint"] = report.max_endpoint;
    j["pass"] = report.pass;
    return j;
}

json connectivity_report_to_json(const ConnectivityReport& report) {
    json j;
    j["n"] = report.n;
    j["m"] = report.m;
    j["delta"] = report.delta;
    j["samples"] = report.samples;
    j["sublevel_count"] = report.sublevel_count;
    j["components"] = report.components;
    j["radius"] = report.radius;
    j["nonempty"] = report.nonempty;
    j["pass"] = report.pass;
    return j;
}

json zhislin_report_to_json(const ZhislinReport& report) {
    json j;
    j["R_values"] = report.R_values;
    j["values"] = report.values;
    j["kinetic"] = report.kinetic;
    j["potential"] = report.potential;
    j["fit_c"] = report.fit_c;
    j["fit_d"] = report.fit_d;
    j["floor"] = report.floor;
    j["min_value"] = report.min_value;
    j["argmin_R"] = report.argmin_R;
    j["dips_below_floor"] = report.dips_below_floor;
    j["max_cross_term"] = report.max_cross_term;
    j["span_eigenvalues"] = report.span_eigenvalues;
    j["all_span_negative"] = report.all_span_negative;
    return j;
}

json decay_fit_to_json(const DecayFit& fit) {
    json j;
    j["applicable"] = fit.applicable;
    j["rate"] = fit.rate;
    j["r_squared"] = fit.r_squared;
    j["certified"] = fit.certified;
    j["radii"] = fit.radii;
    j["shell_log_average"] = fit.shell_log_average;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
}

} // namespace dispersia
