#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "nfc/correlation.hpp"
#include "nfc/geometry.hpp"

namespace nfc {

struct Scene {
    Wave wave;
    ArrayGeometry array;
    std::vector<ScattererCluster> clusters;

    CorrelationKernel kernel() const { return {clusters, wave}; }
};

// {wavelength, array: {ny, nz, dy, dz}, scatterers: [{center, normal, radius,
// concentration, power}]}. Unknown keys are rejected; normals are normalised.
// Throws std::invalid_argument with the offending key.
Scene parse_scene(const nlohmann::json &j, bool require_scatterers = true);
Scene load_scene(const std::string &path, bool require_scatterers = true);
nlohmann::json scene_to_json(const Scene &scene);

}  // namespace nfc
