// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "agentpanel/persona_panel.hpp"

namespace agentpanel {

/// Five bounded affect dimensions carried by a judge across turns.
struct EmotionalState {
  double trust = 0.5;
  double frustration = 0.0;
  double engagement = 0.7;
  double patience = 0.8;
  double fatigue = 0.0;

  friend bool operator==(const EmotionalState&, const EmotionalState&) = default;
};

/// Per-dimension rates of the turn update.
struct EmotionParams {
  double gain = 0.4;             // frustration and trust step (lambda_0)
  double engagement_rate = 0.2;  // response to quality trend
  double patience_rate = 0.15;
  double fatigue_rate = 0.02;
};

struct TrajectorySummary {
  double peak_frustration = 0.0;
  double trust_gain = 0.0;
  double mean_engagement = 0.0;
  double final_patience = 0.0;
};

/// Profile-independent starting state (0.5, 0.0, 0.7, 0.8, 0.0).
EmotionalState init_state(const BigFiveProfile& profile);

/// One turn of the personality-gated update. All inputs must lie in [0,1];
/// the update reads the pre-turn state for every dimension.
///
///   frustration += gain (0.5 + N)(0.5 - q)
///   trust       += gain (q - 0.5)(0.5 + A)        if q >= 0.5
///   trust       -= gain (0.5 - q)(1.5 - A)        otherwise
///   engagement  += engagement_rate (q - q_prev_mean)
///   patience    -= patience_rate (1 - q)(1 + frustration)
///   fatigue     += fatigue_rate (2 - C)
///
/// Each result is clamped to [0,1].
EmotionalState update_state(const EmotionalState& state, const BigFiveProfile& profile, double q,
                            double q_prev_mean, const EmotionParams& params = {});

/// Summary over an ordered state sequence; throws ValidationError when empty.
TrajectorySummary trajectory_stats(std::span<const EmotionalState> states);

/// Initial state plus one state per completed turn.
struct EmotionTrajectory {
  EmotionalState initial;
  std::vector<EmotionalState> turns;

  /// Stats over initial followed by every turn state.
  TrajectorySummary summary() const;
};

}  // namespace agentpanel
