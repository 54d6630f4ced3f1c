#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sanctsim/engine.hpp"

namespace sanctsim {

/// One summary row in the shape of the performance table: contribution,
/// payoffs, institution choice, sanction ratio, and threshold rates.
struct MetricsSummary {
  double contribution_mean = 0.0;
  // Agent-round std for a single run; across-run std for aggregates
  // (absent when aggregating a single run).
  std::optional<double> contribution_std;
  double avg_payoff_per_round = 0.0;
  std::optional<double> avg_payoff_std;  // aggregates only
  double cumulative_payoff = 0.0;
  std::optional<double> cumulative_payoff_std;  // aggregates only
  double si_rate = 0.0;                // percent of agent-round choices
  double punish_reward_ratio = 0.0;    // meaningless when ratio_infinite
  bool ratio_infinite = false;
  double high_contributor_rate = 0.0;  // percent of agent-rounds
  double free_rider_rate = 0.0;        // percent of agent-rounds
  int n_runs = 1;
  int rounds = 0;
  bool partial = false;
};

/// Computes the summary for one run. Partial transcripts are summarized
/// over the rounds present and flagged.
MetricsSummary run_metrics(const RunTranscript& transcript);

/// Means of run-level means, std across run-level means. A single input
/// run yields point estimates with no std. Throws on empty input.
MetricsSummary aggregate_runs(const std::vector<MetricsSummary>& summaries);

/// Per-round mean contribution across agents, one value per round.
std::vector<double> contribution_series(const RunTranscript& transcript);

/// Fixed-order CSV matching the performance-table columns.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label,
                            const MetricsSummary& summary);

/// Two-column per-round series CSV (round, mean_contribution).
std::string series_csv(const std::vector<double>& series);

}  // namespace sanctsim
