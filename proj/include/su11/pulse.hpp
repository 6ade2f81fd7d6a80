#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "su11/errors.hpp"

namespace su11 {

/// Parametric amplifier pulse: sum-frequency drive mu for `duration` seconds.
struct PaSegment {
  double mu = 0.0;
  double duration = 0.0;
};

/// Free evolution; the signal envelope picks up `sensing_phase` over the segment.
struct DwellSegment {
  double duration = 0.0;
  double sensing_phase = 0.0;
};

/// Beamsplitter pulse reaching mixing angle `phi` after `duration` seconds.
/// A zero duration applies the lossless map instantaneously.
struct BsSegment {
  double phi = 0.0;
  double duration = 0.0;
};

/// Free evolution over which the output quadratures are averaged.
struct MeasureSegment {
  double window = 0.0;
};

using Segment = std::variant<PaSegment, DwellSegment, BsSegment, MeasureSegment>;

enum class SegmentKind { PA, Dwell, BS, Measure };

inline SegmentKind kind_of(const Segment& s) { return static_cast<SegmentKind>(s.index()); }

inline const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::PA: return "PA";
    case SegmentKind::Dwell: return "Dwell";
    case SegmentKind::BS: return "BS";
    case SegmentKind::Measure: return "Measure";
  }
  return "?";
}

inline double duration_of(const Segment& s) {
  return std::visit(
      [](const auto& seg) {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, MeasureSegment>) {
          return seg.window;
        } else {
          return seg.duration;
        }
      },
      s);
}

class PulseSequence {
 public:
  PulseSequence() = default;

  PulseSequence& pa(double mu, double duration) {
    segments_.emplace_back(PaSegment{mu, duration});
    return *this;
  }
  PulseSequence& dwell(double duration, double sensing_phase = 0.0) {
    segments_.emplace_back(DwellSegment{duration, sensing_phase});
    return *this;
  }
  PulseSequence& bs(double phi, double duration = 0.0) {
    segments_.emplace_back(BsSegment{phi, duration});
    return *this;
  }
  PulseSequence& measure(double window = 0.0) {
    segments_.emplace_back(MeasureSegment{window});
    return *this;
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return segments_.size(); }
  bool empty() const noexcept { return segments_.empty(); }

  double total_duration() const {
    double t = 0.0;
    for (const auto& s : segments_) t += duration_of(s);
    return t;
  }

  double max_mu() const {
    double m = 0.0;
    for (const auto& s : segments_)
      if (const auto* pa = std::get_if<PaSegment>(&s)) m = std::max(m, pa->mu);
    return m;
  }

  bool has_measure() const {
    for (const auto& s : segments_)
      if (std::holds_alternative<MeasureSegment>(s)) return true;
    return false;
  }

  /// Same sequence with every PA drive multiplied by `factor`.
  PulseSequence with_mu_scaled(double factor) const {
    PulseSequence out = *this;
    for (auto& s : out.segments_)
      if (auto* pa = std::get_if<PaSegment>(&s)) pa->mu *= factor;
    return out;
  }

  void validate() const {
    std::vector<std::string> problems;
    int measures = 0;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const auto& s = segments_[k];
      const double d = duration_of(s);
      if (!std::isfinite(d) || d < 0.0)
        problems.push_back("segment " + std::to_string(k) + ": duration must be finite and >= 0");
      if (const auto* pa = std::get_if<PaSegment>(&s)) {
        if (!std::isfinite(pa->mu) || pa->mu < 0.0)
          problems.push_back("segment " + std::to_string(k) + ": PA mu must be >= 0");
      }
      if (const auto* dw = std::get_if<DwellSegment>(&s)) {
        if (!std::isfinite(dw->sensing_phase))
          problems.push_back("segment " + std::to_string(k) + ": sensing phase must be finite");
      }
      if (const auto* bs = std::get_if<BsSegment>(&s)) {
        if (!std::isfinite(bs->phi))
          problems.push_back("segment " + std::to_string(k) + ": BS angle must be finite");
      }
      if (std::holds_alternative<MeasureSegment>(s)) ++measures;
    }
    if (measures > 1) problems.push_back("at most one Measure segment is allowed");
    if (!problems.empty()) throw ValidationError(std::move(problems));
  }

 private:
  std::vector<Segment> segments_;
};

}  // namespace su11
