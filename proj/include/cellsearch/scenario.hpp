#pragma once

#include <string>

#include "cellsearch/antenna_array.hpp"
#include "cellsearch/channel.hpp"
#include "cellsearch/pss_signal.hpp"
#include "cellsearch/rx_frontend.hpp"

namespace cellsearch {

enum class ChannelMode { single, multipath };

// reduced: draws the matched-filter outputs and the residual energy directly
// from their exact distributions. explicit_slots: synthesizes every R_k.
enum class SlotModel { reduced, explicit_slots };

/// One curve's worth of simulation settings.
struct Scenario {
  std::string id = "base";
  PssConfig pss = build_config({});
  ArrayGeometry bs{8, 8, 0.5};
  ArrayGeometry ue{4, 4, 0.5};
  FrontendSpec frontend;
  TxMode tx_mode = TxMode::omni;
  ChannelMode channel_mode = ChannelMode::single;
  MultipathParams multipath;
  FadingModel fading = FadingModel::iid;
  ElevationSampling sampling = ElevationSampling::sphere;
  SlotModel slot_model = SlotModel::reduced;
  double residual_offset_hz = 0.0;  // true minus hypothesised frequency

  void validate() const;  // throws ConfigError
};

}  // namespace cellsearch
