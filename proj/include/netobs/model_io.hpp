#pragma once

#include <optional>
#include <string>

#include "netobs/model.hpp"
#include "netobs/reaction.hpp"

namespace netobs {

// A model file plus the metadata the harness needs: recommended step size,
// default initial state, and conservation rows for reaction models.
struct LoadedModel {
    ContinuousModel model;
    std::string type;  // "reaction", "mass_spring", "hill"
    double recommended_h = 0.0;
    std::optional<StateVector> default_initial;
    std::vector<StateVector> conservation;
    std::optional<MassSpringConfig> mass_spring;  // kept for energy checks
};

// Dispatches on the file's `type` key.
LoadedModel load_model(const std::string& path);

}  // namespace netobs
