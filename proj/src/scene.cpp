#include "nfc/scene.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace nfc {

namespace {

using nlohmann::json;

void reject_unknown(const json &j, const std::set<std::string> &allowed, const std::string &where)
{
    if (!j.is_object())
        throw std::invalid_argument(where + " must be an object");
    for (const auto &item : j.items())
        if (!allowed.count(item.key()))
            throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
}

double number(const json &j, const char *key, const std::string &where)
{
    if (!j.contains(key))
        throw std::invalid_argument("missing key '" + std::string(key) + "' in " + where);
    const auto &v = j.at(key);
    if (!v.is_number())
        throw std::invalid_argument("'" + std::string(key) + "' in " + where + " must be a number");
    return v.get<double>();
}

std::size_t count(const json &j, const char *key, const std::string &where)
{
    const double v = number(j, key, where);
    if (v < 1 || v != static_cast<double>(static_cast<long long>(v)))
        throw std::invalid_argument("'" + std::string(key) + "' in " + where +
                                    " must be a positive integer");
    return static_cast<std::size_t>(v);
}

Vec3 vec3(const json &j, const char *key, const std::string &where)
{
    if (!j.contains(key))
        throw std::invalid_argument("missing key '" + std::string(key) + "' in " + where);
    const auto &v = j.at(key);
    if (!v.is_array() || v.size() != 3)
        throw std::invalid_argument("'" + std::string(key) + "' in " + where +
                                    " must be a 3-element array");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!v[static_cast<std::size_t>(i)].is_number())
            throw std::invalid_argument("'" + std::string(key) + "' in " + where +
                                        " must hold numbers");
        out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
}

}  // namespace

Scene parse_scene(const json &j, bool require_scatterers)
{
    reject_unknown(j, {"wavelength", "array", "scatterers"}, "scene");
    Scene s;
    s.wave.wavelength = number(j, "wavelength", "scene");
    s.wave.validate();

    if (!j.contains("array"))
        throw std::invalid_argument("missing key 'array' in scene");
    const auto &a = j.at("array");
    reject_unknown(a, {"ny", "nz", "dy", "dz"}, "array");
    s.array.n_y = count(a, "ny", "array");
    s.array.n_z = count(a, "nz", "array");
    s.array.spacing_y = number(a, "dy", "array");
    s.array.spacing_z = number(a, "dz", "array");
    s.array.validate();

    if (j.contains("scatterers")) {
        const auto &list = j.at("scatterers");
        if (!list.is_array())
            throw std::invalid_argument("'scatterers' must be an array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string where = "scatterers[" + std::to_string(i) + "]";
            const auto &c = list[i];
            reject_unknown(c, {"center", "normal", "radius", "concentration", "power"}, where);
            ScattererCluster cl;
            cl.center = vec3(c, "center", where);
            const Vec3 n = vec3(c, "normal", where);
            if (!(n.norm() > 0.0))
                throw std::invalid_argument("'normal' in " + where + " must be non-zero");
            cl.normal = n.normalized();
            cl.radius = number(c, "radius", where);
            cl.concentration = number(c, "concentration", where);
            cl.power = number(c, "power", where);
            try {
                cl.validate();
            } catch (const std::invalid_argument &e) {
                throw std::invalid_argument(where + ": " + e.what());
            }
            s.clusters.push_back(cl);
        }
    }
    if (require_scatterers && s.clusters.empty())
        throw std::invalid_argument("scene needs at least one scatterer");
    return s;
}

Scene load_scene(const std::string &path, bool require_scatterers)
{
    std::ifstream is(path);
    if (!is)
        throw std::invalid_argument("cannot open scene file '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error &e) {
        throw std::invalid_argument("scene file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_scene(j, require_scatterers);
}

nlohmann::json scene_to_json(const Scene &scene)
{
    json j;
    j["wavelength"] = scene.wave.wavelength;
    j["array"] = {{"ny", scene.array.n_y},
                  {"nz", scene.array.n_z},
                  {"dy", scene.array.spacing_y},
                  {"dz", scene.array.spacing_z}};
    j["scatterers"] = json::array();
    for (const auto &c : scene.clusters)
        j["scatterers"].push_back({{"center", {c.center.x(), c.center.y(), c.center.z()}},
                                   {"normal", {c.normal.x(), c.normal.y(), c.normal.z()}},
                                   {"radius", c.radius},
                                   {"concentration", c.concentration},
                                   {"power", c.power}});
    return j;
}

}  // namespace nfc
