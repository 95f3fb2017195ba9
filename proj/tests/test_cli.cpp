#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <string>

#include "dispersia/json_io.hpp"

using namespace dispersia;
namespace fs = std::filesystem;

namespace {

const std::string cli = DISPERSIA_CLI_PATH;
const std::string source_dir = DISPERSIA_SOURCE_DIR;

struct RunResult {
    int exit_code;
    std::string stdout_text;
};

RunResult run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + cli + " " + args + " 2>/tmp/dispersia_stderr.txt";
    std::array<char, 4096> buffer;
    std::string output;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::size_t got = fread(buffer.data(), 1, buffer.size(), pipe))
        output.append(buffer.data(), got);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), output};
}

std::string stderr_text() { return read_file("/tmp/dispersia_stderr.txt"); }

// Minimal structural validator for the subset of JSON Schema the published
// schemas use: type, properties, required, items, enum, patternProperties,
// additionalProperties(false).
bool type_matches(const json& schema_type, const json& value) {
    auto one = [&](const std::string& t) {
        if (t == "object") return value.is_object();
        if (t == "array") return value.is_array();
        if (t == "string") return value.is_string();
        if (t == "integer") return value.is_number_integer() || value.is_number_unsigned();
        if (t == "number") return value.is_number();
        if (t == "boolean") return value.is_boolean();
        if (t == "null") return value.is_null();
        return false;
    };
    if (schema_type.is_string()) return one(schema_type.get<std::string>());
    for (const auto& t : schema_type)
        if (one(t.get<std::string>())) return true;
    return false;
}

bool validate(const json& schema, const json& value) {
    if (schema.contains("type") && !type_matches(schema.at("type"), value)) return false;
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& candidate : schema.at("enum")) found = found || candidate == value;
        if (!found) return false;
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema.at("required"))
                if (!value.contains(key.get<std::string>())) return false;
        const json props = schema.value("properties", json::object());
        const json patterns = schema.value("patternProperties", json::object());
        const bool closed = schema.contains("additionalProperties") &&
                            schema.at("additionalProperties").is_boolean() &&
                            !schema.at("additionalProperties").get<bool>();
        for (const auto& [key, sub] : value.items()) {
            bool matched = false;
            if (props.contains(key)) {
                if (!validate(props.at(key), sub)) return false;
                matched = true;
            }
            for (const auto& [pattern, pschema] : patterns.items())
                if (std::regex_search(key, std::regex(pattern))) {
                    if (!validate(pschema, sub)) return false;
                    matched = true;
                }
            if (closed && !matched) return false;
        }
    }
    if (value.is_array() && schema.contains("items"))
        for (const auto& element : value)
            if (!validate(schema.at("items"), element)) return false;
    return true;
}

void check_against_schema(const std::string& output, const std::string& schema_file) {
    const json schema = json::parse(read_file(source_dir + "/schemas/" + schema_file));
    const json value = json::parse(output);
    CHECK_MESSAGE(validate(schema, value), ("schema violation against " + schema_file).c_str());
}

std::string data(const std::string& name) { return source_dir + "/data/" + name; }

} // namespace

TEST_CASE("help lists every subcommand (golden file)") {
    const RunResult r = run("--help");
    CHECK(r.exit_code == 0);
    const std::string golden = read_file(source_dir + "/tests/golden/help.txt");
    CHECK(r.stdout_text == golden);
}

TEST_CASE("missing input file exits 1 and names the path") {
    const RunResult r = run("multipole --density /nonexistent/rho.json --order 1");
    CHECK(r.exit_code == 1);
    CHECK(stderr_text().find("/nonexistent/rho.json") != std::string::npos);
}

TEST_CASE("unknown subcommand is a usage error") {
    const RunResult r = run("frobnicate");
    CHECK(r.exit_code != 0);
}

TEST_CASE("multipole output validates and has sorted compact keys") {
    const RunResult r = run("multipole --density " + data("quadrupole.json") + " --order 2");
    CHECK(r.exit_code == 0);
    check_against_schema(r.stdout_text, "multipole_output.schema.json");
    const json j = json::parse(r.stdout_text);
    CHECK(j.at("entries").contains("33"));
    CHECK(j.at("entries").at("33").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("expand output validates and meets the slope") {
    const RunResult r = run("expand --rho1 " + data("dipole.json") + " --rho2 " +
                            data("dipole.json") + " --K 4 --L 40,80,160,320");
    CHECK(r.exit_code == 0);
    check_against_schema(r.stdout_text, "expand_output.schema.json");
    const json j = json::parse(r.stdout_text);
    CHECK(j.at("fitted_slope").get<double>() <= -4.7);
}

TEST_CASE("vdw output validates and reports 0.75 for the drude pair") {
    const RunResult r = run("vdw --mol1 " + data("drude.json") + " --mol2 " + data("drude.json") +
                            " --haar 3 --seed 5");
    CHECK(r.exit_code == 0);
    check_against_schema(r.stdout_text, "vdw_output.schema.json");
    const json j = json::parse(r.stdout_text);
    CHECK(j.at("C_vdW").get<double>() == doctest::Approx(0.75).epsilon(1e-10));
    for (const auto& v : j.at("haar_values"))
        CHECK(v.get<double>() == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("pseudomin and connectivity outputs validate") {
    const RunResult pm = run("pseudomin --n 1 --m 1 --delta 0.1 --trials 4 --seed 2");
    CHECK(pm.exit_code == 0);
    check_against_schema(pm.stdout_text, "pseudomin_output.schema.json");

    const RunResult cn = run("connectivity --n 1 --m 1 --delta 0.1 --samples 500 --seed 2");
    CHECK(cn.exit_code == 0);
    check_against_schema(cn.stdout_text, "connectivity_output.schema.json");
}

TEST_CASE("mountainpass and boundpath outputs validate") {
    const RunResult mm = run("mountainpass --surface " + data("dipole_surface.json") +
                             " --tau0 " + data("tau_aligned.json") + " --tau1 " +
                             data("tau_flipped.json") + " --nodes 12 --seed 7");
    CHECK(mm.exit_code == 0);
    check_against_schema(mm.stdout_text, "mountainpass_output.schema.json");

    const RunResult bp = run("boundpath --surface " + data("dipole_surface.json") + " --path " +
                             data("excursion_path.json") + " --Lcut 6 --seed 3");
    CHECK(bp.exit_code == 0);
    check_against_schema(bp.stdout_text, "boundpath_output.schema.json");
    const json j = json::parse(bp.stdout_text);
    CHECK(j.at("status").get<std::string>() == "ok");
}

TEST_CASE("semirel symbol output validates") {
    const RunResult r = run("semirel --experiment symbol --grid 16 --box 16");
    CHECK(r.exit_code == 0);
    check_against_schema(r.stdout_text, "semirel_symbol_output.schema.json");
}

TEST_CASE("identical configs give byte-identical output across thread counts") {
    const std::string args = "expand --rho1 " + data("dipole.json") + " --rho2 " +
                             data("quadrupole.json") + " --K 4 --L 30,60,120 --seed 3";
    const RunResult a = run(args, "DISPERSIA_THREADS=1");
    const RunResult b = run(args, "DISPERSIA_THREADS=1");
    const RunResult c = run(args, "DISPERSIA_THREADS=4");
    CHECK(a.stdout_text == b.stdout_text);
    CHECK(a.stdout_text == c.stdout_text);

    const std::string pm = "pseudomin --n 1 --m 2 --delta 0.1 --trials 3 --seed 9";
    CHECK(run(pm).stdout_text == run(pm).stdout_text);
}

TEST_CASE("csv format emits plot rows beside the json artifact") {
    const fs::path dir = fs::temp_directory_path() / "dispersia_csv_test";
    fs::create_directories(dir);
    const std::string out = (dir / "report.json").string();
    const RunResult r = run("expand --rho1 " + data("dipole.json") + " --rho2 " +
                            data("dipole.json") + " --K 3 --L 40,80,160 --format csv --out " + out);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(out));
    const std::string csv = read_file(out + ".csv");
    CHECK(csv.rfind("L,abs_remainder\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    fs::remove_all(dir);
}

TEST_CASE("property-check failures exit with code 2") {
    // delta above the global minimum magnitude: empty sublevel, pass=false
    const RunResult r = run("connectivity --n 1 --m 1 --delta 3.0 --samples 64 --seed 1");
    CHECK(r.exit_code == 2);
    const json j = json::parse(r.stdout_text);
    CHECK_FALSE(j.at("nonempty").get<bool>());
}

TEST_CASE("order-0 multipole and CSV density input") {
    const fs::path dir = fs::temp_directory_path() / "dispersia_csv_density";
    fs::create_directories(dir);
    const std::string csv_path = (dir / "rho.csv").string();
    write_file(csv_path, "x,y,z,w\n1,0,0,1\n-1,0,0,1\n0,1,0,-2\n");
    const RunResult r = run("multipole --density " + csv_path + " --order 0");
    CHECK(r.exit_code == 0);
    const json j = json::parse(r.stdout_text);
    CHECK(j.at("entries").at("").get<double>() == 0.0);
    check_against_schema(r.stdout_text, "multipole_output.schema.json");
    fs::remove_all(dir);
}
