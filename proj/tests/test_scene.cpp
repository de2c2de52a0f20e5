#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "nfc/scene.hpp"

using namespace nfc;
using nlohmann::json;

namespace {

json base_scene()
{
    return json::parse(R"({
        "wavelength": 0.05,
        "array": {"ny": 4, "nz": 3, "dy": 0.025, "dz": 0.0125},
        "scatterers": [
            {"center": [30, 10, -5], "normal": [-2, 0, 0], "radius": 1.5,
             "concentration": 0.5, "power": 2.0}
        ]
    })");
}

std::string message_of(const json &j, bool require = true)
{
    try {
        parse_scene(j, require);
    } catch (const std::invalid_argument &e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("scene parsing")
{
    const Scene s = parse_scene(base_scene());
    CHECK(s.wave.wavelength == 0.05);
    CHECK(s.array.n_y == 4);
    CHECK(s.array.n_z == 3);
    CHECK(s.array.spacing_z == 0.0125);
    REQUIRE(s.clusters.size() == 1);
    CHECK(s.clusters[0].normal.x() == doctest::Approx(-1.0));
    CHECK(s.clusters[0].normal.norm() == doctest::Approx(1.0));
    CHECK(s.clusters[0].concentration == 0.5);
    CHECK(s.kernel().clusters.size() == 1);
}

TEST_CASE("scene errors name the offending key")
{
    json j = base_scene();
    j["extra"] = 1;
    CHECK(message_of(j).find("extra") != std::string::npos);

    j = base_scene();
    j["array"].erase("dz");
    CHECK(message_of(j).find("dz") != std::string::npos);

    j = base_scene();
    j["scatterers"][0]["radius"] = "big";
    CHECK(message_of(j).find("radius") != std::string::npos);

    j = base_scene();
    j["scatterers"][0]["center"] = json::array({1, 2});
    CHECK(message_of(j).find("center") != std::string::npos);

    j = base_scene();
    j["scatterers"][0]["normal"] = json::array({0, 0, 0});
    CHECK(message_of(j).find("normal") != std::string::npos);

    j = base_scene();
    j["array"]["ny"] = 0;
    CHECK(message_of(j).find("ny") != std::string::npos);

    j = base_scene();
    j["wavelength"] = -1.0;
    CHECK_FALSE(message_of(j).empty());

    j = base_scene();
    j["scatterers"][0]["radius"] = -1.0;
    CHECK(message_of(j).find("scatterers[0]") != std::string::npos);

    j = base_scene();
    j.erase("scatterers");
    CHECK_FALSE(message_of(j).empty());
    CHECK(message_of(j, false).empty());
}

TEST_CASE("scene JSON round trip and file loading")
{
    const Scene s = parse_scene(base_scene());
    const Scene back = parse_scene(scene_to_json(s));
    CHECK(back.array.n_y == s.array.n_y);
    CHECK((back.clusters[0].center - s.clusters[0].center).norm() == 0.0);
    CHECK((back.clusters[0].normal - s.clusters[0].normal).norm() < 1e-15);

    const auto dir = std::filesystem::temp_directory_path() / "nfc_test_scene";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ok.json") << base_scene().dump();
        std::ofstream(dir / "bad.json") << "{ not json";
    }
    CHECK(load_scene((dir / "ok.json").string()).clusters.size() == 1);
    CHECK_THROWS_AS(load_scene((dir / "bad.json").string()), std::invalid_argument);
    try {
        load_scene((dir / "missing.json").string());
        FAIL("expected an exception");
    } catch (const std::invalid_argument &e) {
        CHECK(std::string(e.what()).find("missing.json") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
