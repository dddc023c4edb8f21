#pragma once

#include <string>

#include "etnet/model.hpp"

namespace etnet {

// Versioned JSON document holding every parameter tensor, the gate-schedule
// seeds (with a materialized prefix for inspection), the dilation schedule,
// normalization statistics, and the construction seed. Loading a dumped model
// reproduces it bit-exactly.
std::string model_to_json(const EtNetModel& model);
EtNetModel model_from_json(const std::string& text);

void save_model(const std::string& path, const EtNetModel& model);
EtNetModel load_model(const std::string& path);

bool models_equal(const EtNetModel& a, const EtNetModel& b);

} // namespace etnet
