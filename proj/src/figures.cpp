#include "cellsearch/figures.hpp"

#include "cellsearch/errors.hpp"

namespace cellsearch {

FigureBundle figure_bundle(int which) {
  FigureBundle b;
  b.which = which;
  switch (which) {
    case 3:
      b.title = "Misdetection vs data SNR, omni and random TX, single path";
      b.series = {
          {"analog_omni", {"frontend.kind=analog", "tx.mode=omni", "channel.model=single"}},
          {"analog_random", {"frontend.kind=analog", "tx.mode=random", "channel.model=single"}},
          {"digital_omni", {"frontend.kind=digital", "tx.mode=omni", "channel.model=single"}},
          {"digital_random", {"frontend.kind=digital", "tx.mode=random", "channel.model=single"}},
          {"digital_q3_omni", {"frontend.kind=digital_q", "frontend.bits=3", "tx.mode=omni", "channel.model=single"}},
      };
      break;
    case 4:
      b.title = "Analog misdetection vs data SNR for longer searches at fixed overhead";
      for (int n : {25, 50, 100, 200}) {
        b.series.push_back({"analog_nslot" + std::to_string(n),
                            {"frontend.kind=analog", "tx.mode=omni", "channel.model=single",
                             "pss.n_slot=" + std::to_string(n)}});
      }
      break;
    case 5:
      b.title = "Misdetection vs data SNR, single path vs multipath, omni TX";
      b.series = {
          {"analog_single", {"frontend.kind=analog", "tx.mode=omni", "channel.model=single"}},
          {"analog_multipath", {"frontend.kind=analog", "tx.mode=omni", "channel.model=multipath"}},
          {"digital_single", {"frontend.kind=digital", "tx.mode=omni", "channel.model=single"}},
          {"digital_multipath", {"frontend.kind=digital", "tx.mode=omni", "channel.model=multipath"}},
      };
      break;
    case 6:
      b.title = "Misdetection vs data SNR, analog / hybrid / digital, multipath, omni TX";
      b.series = {
          {"analog", {"frontend.kind=analog", "tx.mode=omni", "channel.model=multipath"}},
          {"hybrid4", {"frontend.kind=hybrid", "frontend.n_streams=4", "tx.mode=omni", "channel.model=multipath"}},
          {"digital", {"frontend.kind=digital", "tx.mode=omni", "channel.model=multipath"}},
      };
      break;
    default:
      throw ConfigError("--which must be one of 3, 4, 5, 6 (got " + std::to_string(which) + ")");
  }
  return b;
}

}  // namespace cellsearch
