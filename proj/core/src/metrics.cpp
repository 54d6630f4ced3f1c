#include "sanctsim/metrics.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sanctsim {

namespace {

double mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0
                    : std::accumulate(xs.begin(), xs.end(), 0.0) /
                          static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1); nullopt when fewer than 2 values.
std::optional<double> sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return std::nullopt;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string format_value(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_value(*v) : std::string();
}

}  // namespace

MetricsSummary run_metrics(const RunTranscript& transcript) {
  MetricsSummary s;
  s.n_runs = 1;
  s.rounds = static_cast<int>(transcript.rounds.size());
  s.partial = !transcript.complete() ||
              s.rounds < transcript.params.rounds;
  if (transcript.rounds.empty()) return s;

  const int high = transcript.params.effective_high_contributor_threshold();
  const int free_rider = transcript.params.free_rider_threshold;

  std::vector<double> contributions;
  long punish_tokens = 0;
  long reward_tokens = 0;
  long si_choices = 0;
  long high_count = 0;
  long free_count = 0;
  std::vector<double> agent_cumulative(transcript.rounds[0].agents.size(),
                                       0.0);
  for (const RoundRecord& round : transcript.rounds) {
    for (std::size_t i = 0; i < round.agents.size(); ++i) {
      const AgentRoundRecord& a = round.agents[i];
      contributions.push_back(a.contribution);
      if (a.institution == Institution::SI) ++si_choices;
      if (a.contribution >= high) ++high_count;
      if (a.contribution <= free_rider) ++free_count;
      punish_tokens += a.sanctions_given.total_punishment_tokens();
      reward_tokens += a.sanctions_given.total_reward_tokens();
      agent_cumulative[i] += a.payoff.total;
    }
  }

  const double n = static_cast<double>(contributions.size());
  s.contribution_mean = mean(contributions);
  s.contribution_std = sample_std(contributions);
  s.cumulative_payoff = mean(agent_cumulative);
  s.avg_payoff_per_round = s.cumulative_payoff / s.rounds;
  s.si_rate = 100.0 * si_choices / n;
  s.high_contributor_rate = 100.0 * high_count / n;
  s.free_rider_rate = 100.0 * free_count / n;
  if (reward_tokens > 0) {
    s.punish_reward_ratio =
        static_cast<double>(punish_tokens) / reward_tokens;
  } else if (punish_tokens > 0) {
    s.ratio_infinite = true;
  }  // both zero -> ratio 0
  return s;
}

MetricsSummary aggregate_runs(const std::vector<MetricsSummary>& summaries) {
  if (summaries.empty())
    throw std::invalid_argument("cannot aggregate zero runs");
  std::vector<double> means, payoffs, cumulatives;
  MetricsSummary out;
  out.n_runs = static_cast<int>(summaries.size());
  out.rounds = summaries.front().rounds;
  double si = 0, high = 0, free_rate = 0, ratio = 0;
  bool any_infinite = false, any_partial = false;
  for (const MetricsSummary& s : summaries) {
    means.push_back(s.contribution_mean);
    payoffs.push_back(s.avg_payoff_per_round);
    cumulatives.push_back(s.cumulative_payoff);
    si += s.si_rate;
    high += s.high_contributor_rate;
    free_rate += s.free_rider_rate;
    ratio += s.punish_reward_ratio;
    any_infinite |= s.ratio_infinite;
    any_partial |= s.partial;
  }
  const double n = static_cast<double>(summaries.size());
  out.contribution_mean = mean(means);
  out.contribution_std = sample_std(means);
  out.avg_payoff_per_round = mean(payoffs);
  out.avg_payoff_std = sample_std(payoffs);
  out.cumulative_payoff = mean(cumulatives);
  out.cumulative_payoff_std = sample_std(cumulatives);
  out.si_rate = si / n;
  out.high_contributor_rate = high / n;
  out.free_rider_rate = free_rate / n;
  out.ratio_infinite = any_infinite;
  out.punish_reward_ratio = any_infinite ? 0.0 : ratio / n;
  out.partial = any_partial;
  return out;
}

std::vector<double> contribution_series(const RunTranscript& transcript) {
  std::vector<double> series;
  series.reserve(transcript.rounds.size());
  for (const RoundRecord& round : transcript.rounds) {
    double sum = 0;
    for (const AgentRoundRecord& a : round.agents) sum += a.contribution;
    series.push_back(round.agents.empty()
                         ? 0.0
                         : sum / static_cast<double>(round.agents.size()));
  }
  return series;
}

std::string metrics_csv_header() {
  return "model,contribution_mean,contribution_std,avg_payoff_per_round,"
         "avg_payoff_std,cumulative_payoff,cumulative_payoff_std,si_rate,"
         "punish_reward_ratio,high_contributor_rate,free_rider_rate,n_runs,"
         "partial";
}

std::string metrics_csv_row(const std::string& label,
                            const MetricsSummary& s) {
  std::ostringstream os;
  os << label << ',' << format_value(s.contribution_mean) << ','
     << format_optional(s.contribution_std) << ','
     << format_value(s.avg_payoff_per_round) << ','
     << format_optional(s.avg_payoff_std) << ','
     << format_value(s.cumulative_payoff) << ','
     << format_optional(s.cumulative_payoff_std) << ','
     << format_value(s.si_rate) << ','
     << (s.ratio_infinite ? std::string("inf")
                          : format_value(s.punish_reward_ratio))
     << ',' << format_value(s.high_contributor_rate) << ','
     << format_value(s.free_rider_rate) << ',' << s.n_runs << ','
     << (s.partial ? "true" : "false");
  return os.str();
}

std::string series_csv(const std::vector<double>& series) {
  std::ostringstream os;
  os << "round,mean_contribution\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << (i + 1) << ',' << format_value(series[i]) << '\n';
  }
  return os.str();
}

}  // namespace sanctsim
