#pragma once

#include <string>
#include <vector>

#include "mre/error.hpp"
#include "mre/harness.hpp"

namespace mre {

/// The four two-layer benchmark experiments: elastic and viscoelastic media
/// at 20 Hz and 250 Hz, each inverted from 20% noisy data. Reference values
/// are the published recoveries of the same experiments.
inline std::vector<std::string> preset_names() { return {"1.1", "1.2", "2.1", "2.2"}; }

inline ExperimentSpec preset(const std::string& name) {
  ExperimentSpec s;
  s.name = "example-" + name;
  s.noise_level = 0.2;
  if (name == "1.1") {
    s.elastic = true;
    s.frequency_Hz = 20.0;
    s.initial_storage_kPa = {30.0, 30.0};
    s.reference_storage_kPa = LayerPair{20.1370, 9.9888};
    s.tolerance = {0.05, 0.10};
  } else if (name == "1.2") {
    s.elastic = true;
    s.frequency_Hz = 250.0;
    s.initial_storage_kPa = {21.0, 9.5};
    s.reference_storage_kPa = LayerPair{19.9987, 9.9999};
    s.tolerance = {0.01, 0.07};
  } else if (name == "2.1") {
    s.frequency_Hz = 20.0;
    s.reference_storage_kPa = LayerPair{19.8202, 9.9829};
    s.reference_viscosity_Pa_s = LayerPair{0.3849, 0.2990};
    s.tolerance = {0.05, 0.10};
  } else if (name == "2.2") {
    s.frequency_Hz = 250.0;
    s.reference_storage_kPa = LayerPair{19.9951, 9.9997};
    s.reference_viscosity_Pa_s = LayerPair{0.3948, 0.3040};
    s.tolerance = {0.01, 0.07};
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown example '" + name + "' (expected 1.1, 1.2, 2.1 or 2.2)");
  }
  if (s.elastic) s.viscosity_Pa_s = s.initial_viscosity_Pa_s = {0.0, 0.0};
  return s;
}

}  // namespace mre
