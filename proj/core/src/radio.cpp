#include "tschsim/radio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tschsim {

void RadioConfig::validate() const {
  if (!std::isfinite(ptDbm)) throw std::invalid_argument("tx power must be finite");
  if (!std::isfinite(centerFrequencyHz) || centerFrequencyHz <= 0.0) {
    throw std::invalid_argument("center frequency must be positive");
  }
  if (!std::isfinite(channelSpacingHz) || channelSpacingHz <= 0.0) {
    throw std::invalid_argument("channel spacing must be positive");
  }
  if (channelCount < 1) throw std::invalid_argument("channel count must be >= 1");
  if (!(antennaGainProduct > 0.0)) throw std::invalid_argument("antenna gain must be positive");
  if (!(sensitivityDbm < saturationDbm)) {
    throw std::invalid_argument("sensitivity must be below saturation");
  }
  if (!(pisterHackMaxDb >= 0.0)) throw std::invalid_argument("pister-hack bound must be >= 0");
}

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

double friis_rx_power(double distanceM, const RadioConfig& cfg) {
  if (!(distanceM > 0.0)) throw std::invalid_argument("friis: distance must be positive");
  const double lambda = cfg.wavelength();
  const double ptMw = std::pow(10.0, cfg.ptDbm / 10.0);
  const double ratio = (4.0 * std::numbers::pi * distanceM);
  const double prMw = ptMw * cfg.antennaGainProduct * lambda * lambda / (ratio * ratio);
  return 10.0 * std::log10(prMw);
}

double pister_hack_rssi(double friisDbm, RandomSource& rng, double maxDb) {
  return friisDbm - rng.uniform_real(0.0, maxDb);
}

double rssi_to_pdr(double rssiDbm, const RadioConfig& cfg) {
  if (rssiDbm < cfg.sensitivityDbm) return 0.0;
  if (rssiDbm >= cfg.saturationDbm) return 1.0;
  return (rssiDbm - cfg.sensitivityDbm) / (cfg.saturationDbm - cfg.sensitivityDbm);
}

LinkTable::LinkTable(std::size_t nodeCount)
    : n_(nodeCount), links_(nodeCount * nodeCount) {}

LinkTable LinkTable::build(std::span<const Position> positions, const RadioConfig& cfg,
                           std::uint64_t masterSeed) {
  LinkTable table(positions.size());
  for (NodeId a = 0; a < positions.size(); ++a) {
    for (NodeId b = a + 1; b < positions.size(); ++b) {
      const double friis = friis_rx_power(distance(positions[a], positions[b]), cfg);
      RandomSource rng(masterSeed, StreamId{StreamPurpose::PisterHack, a, b});
      table.set(a, b, pister_hack_rssi(friis, rng, cfg.pisterHackMaxDb), cfg);
    }
  }
  return table;
}

void LinkTable::set(NodeId a, NodeId b, double rssiDbm, const RadioConfig& cfg) {
  const LinkRealization link{rssiDbm, rssi_to_pdr(rssiDbm, cfg)};
  links_[a * n_ + b] = link;
  links_[b * n_ + a] = link;
}

std::vector<Reception> resolve_slot(std::span<const SlotTransmission> transmissions,
                                    std::span<const Listener> listeners,
                                    const LinkTable& links, const RadioConfig& cfg,
                                    std::span<RandomSource> streams) {
  std::vector<Reception> out;
  out.reserve(listeners.size());
  for (const Listener& l : listeners) {
    Reception rx{l.node, RxOutcome::Idle, std::nullopt};
    const bool transmitting =
        std::any_of(transmissions.begin(), transmissions.end(),
                    [&](const SlotTransmission& t) { return t.sender == l.node; });
    if (!transmitting) {
      std::size_t audible = 0;
      std::size_t heard = 0;
      for (std::size_t i = 0; i < transmissions.size(); ++i) {
        const SlotTransmission& t = transmissions[i];
        if (t.channel != l.channel) continue;
        if (!links.audible(t.sender, l.node, cfg)) continue;
        ++audible;
        heard = i;
      }
      if (audible >= 2) {
        rx.outcome = RxOutcome::Collision;
      } else if (audible == 1) {
        rx.transmission = heard;
        const double pdr = links.at(transmissions[heard].sender, l.node).pdr;
        rx.outcome = streams[l.node].bernoulli(pdr) ? RxOutcome::Delivered : RxOutcome::FadedLoss;
      }
    }
    out.push_back(rx);
  }
  return out;
}

}  // namespace tschsim
