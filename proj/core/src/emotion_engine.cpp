// SPDX-License-Identifier: Apache-2.0
#include "agentpanel/emotion_engine.hpp"

#include <algorithm>
#include <sstream>

#include "agentpanel/error.hpp"

namespace agentpanel {
namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << name << " " << v << " outside [0,1]";
    throw RangeError(msg.str());
  }
}

}  // namespace

EmotionalState init_state(const BigFiveProfile& /*profile*/) { return EmotionalState{}; }

EmotionalState update_state(const EmotionalState& s, const BigFiveProfile& profile, double q,
                            double q_prev_mean, const EmotionParams& params) {
  require_unit(q, "quality");
  require_unit(q_prev_mean, "prior mean quality");
  require_unit(s.trust, "trust");
  require_unit(s.frustration, "frustration");
  require_unit(s.engagement, "engagement");
  require_unit(s.patience, "patience");
  require_unit(s.fatigue, "fatigue");
  profile.validate();

  const double n = profile.neuroticism;
  const double a = profile.agreeableness;
  const double c = profile.conscientiousness;

  EmotionalState next;
  next.frustration = clamp01(s.frustration + params.gain * (0.5 + n) * (0.5 - q));
  if (q >= 0.5) {
    next.trust = clamp01(s.trust + params.gain * (q - 0.5) * (0.5 + a));
  } else {
    next.trust = clamp01(s.trust - params.gain * (0.5 - q) * (1.5 - a));
  }
  next.engagement = clamp01(s.engagement + params.engagement_rate * (q - q_prev_mean));
  next.patience = clamp01(s.patience - params.patience_rate * (1.0 - q) * (1.0 + s.frustration));
  next.fatigue = clamp01(s.fatigue + params.fatigue_rate * (2.0 - c));
  return next;
}

TrajectorySummary trajectory_stats(std::span<const EmotionalState> states) {
  if (states.empty()) throw ValidationError("empty emotion trajectory");
  TrajectorySummary out;
  out.peak_frustration = states.front().frustration;
  double engagement_sum = 0.0;
  for (const auto& s : states) {
    out.peak_frustration = std::max(out.peak_frustration, s.frustration);
    engagement_sum += s.engagement;
  }
  out.trust_gain = states.back().trust - states.front().trust;
  out.mean_engagement = engagement_sum / static_cast<double>(states.size());
  out.final_patience = states.back().patience;
  return out;
}

TrajectorySummary EmotionTrajectory::summary() const {
  std::vector<EmotionalState> all;
  all.reserve(turns.size() + 1);
  all.push_back(initial);
  all.insert(all.end(), turns.begin(), turns.end());
  return trajectory_stats(all);
}

}  // namespace agentpanel
