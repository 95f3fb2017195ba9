#pragma once

#include <json.hpp>
#include <string>

#include "dispersia/coulomb.hpp"
#include "dispersia/energy_model.hpp"
#include "dispersia/pathopt.hpp"
#include "dispersia/semirel.hpp"

namespace dispersia {

using json = nlohmann::json;

// Densities: {"label": str, "points": [[x,y,z],...], "weights": [w,...]}
// or CSV with the exact header "x,y,z,w". Strict parses: a length mismatch
// or malformed row is a hard error.
json density_to_json(const ChargeDensity& rho);
ChargeDensity density_from_json(const json& j);
ChargeDensity load_density(const std::string& path); // dispatches on extension
void save_density(const ChargeDensity& rho, const std::string& path);
ChargeDensity density_from_csv(const std::string& text, const std::string& label);
std::string density_to_csv(const ChargeDensity& rho);

// Rotations as row-major 9-tuples.
json rotation_to_json(const Rotation& r);
Rotation rotation_from_json(const json& j);

json configuration_to_json(const Configuration& tau);
Configuration configuration_from_json(const json& j);

json path_to_json(const PathOnConfigSpace& path);
PathOnConfigSpace path_from_json(const json& j);

// Toy molecules: {"H": [[...]], "Dx": ..., "Dy": ..., "Dz": ...} with
// complex entries as [re, im] pairs (plain numbers accepted on input).
json toy_molecule_to_json(const ToyMolecule& mol);
ToyMolecule toy_molecule_from_json(const json& j);

json energy_surface_to_json(const EnergySurface& surface);
EnergySurface energy_surface_from_json(const json& j);

json multipole_to_json(const MultipoleTensor& tensor);
json expansion_report_to_json(const ExpansionReport& report);
json minmax_result_to_json(const MinMaxResult& result);
json bounded_path_result_to_json(const BoundedPathResult& result);
json negativity_report_to_json(const NegativityReport& report);
json connectivity_report_to_json(const ConnectivityReport& report);
json zhislin_report_to_json(const ZhislinReport& report);
json decay_fit_to_json(const DecayFit& fit);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace dispersia
