#include "sanctsim/store.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace sanctsim {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key))
      throw std::runtime_error("unknown key '" + key + "' in " + context);
  }
}

json params_to_json(const GameParameters& p) {
  json j;
  j["endowment_stage1"] = p.endowment_stage1;
  j["sanction_endowment"] = p.sanction_endowment;
  j["multiplier"] = p.multiplier;
  j["group_size"] = p.group_size;
  j["rounds"] = p.rounds;
  j["reward_cost"] = p.reward_cost;
  j["reward_effect"] = p.reward_effect;
  j["punishment_cost"] = p.punishment_cost;
  j["punishment_effect"] = p.punishment_effect;
  j["min_contribution"] = p.min_contribution;
  if (p.max_contribution) j["max_contribution"] = *p.max_contribution;
  j["display_window"] = p.display_window;
  if (p.high_contributor_threshold)
    j["high_contributor_threshold"] = *p.high_contributor_threshold;
  j["free_rider_threshold"] = p.free_rider_threshold;
  return j;
}

GameParameters params_from_json(const json& j) {
  reject_unknown_keys(
      j,
      {"endowment_stage1", "sanction_endowment", "multiplier", "group_size",
       "rounds", "reward_cost", "reward_effect", "punishment_cost",
       "punishment_effect", "min_contribution", "max_contribution",
       "display_window", "high_contributor_threshold", "free_rider_threshold"},
      "params");
  GameParameters p;
  p.endowment_stage1 = j.value("endowment_stage1", p.endowment_stage1);
  p.sanction_endowment = j.value("sanction_endowment", p.sanction_endowment);
  p.multiplier = j.value("multiplier", p.multiplier);
  p.group_size = j.value("group_size", p.group_size);
  p.rounds = j.value("rounds", p.rounds);
  p.reward_cost = j.value("reward_cost", p.reward_cost);
  p.reward_effect = j.value("reward_effect", p.reward_effect);
  p.punishment_cost = j.value("punishment_cost", p.punishment_cost);
  p.punishment_effect = j.value("punishment_effect", p.punishment_effect);
  p.min_contribution = j.value("min_contribution", p.min_contribution);
  if (j.contains("max_contribution"))
    p.max_contribution = j["max_contribution"].get<int>();
  p.display_window = j.value("display_window", p.display_window);
  if (j.contains("high_contributor_threshold"))
    p.high_contributor_threshold = j["high_contributor_threshold"].get<int>();
  p.free_rider_threshold =
      j.value("free_rider_threshold", p.free_rider_threshold);
  return p;
}

json provider_to_json(const ProviderConfig& c) {
  json j;
  j["base_url"] = c.base_url;
  j["endpoint_path"] = c.endpoint_path;
  j["model_id"] = c.model_id;
  j["api_key_env"] = c.api_key_env;
  if (c.temperature) j["temperature"] = *c.temperature;
  if (c.reasoning_effort) j["reasoning_effort"] = *c.reasoning_effort;
  j["request_timeout_s"] = c.request_timeout_s;
  j["max_retries"] = c.max_retries;
  j["initial_backoff_ms"] = c.initial_backoff_ms;
  return j;
}

ProviderConfig provider_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"base_url", "endpoint_path", "model_id", "api_key_env",
                       "temperature", "reasoning_effort", "request_timeout_s",
                       "max_retries", "initial_backoff_ms"},
                      "provider");
  ProviderConfig c;
  c.base_url = j.value("base_url", "");
  c.endpoint_path = j.value("endpoint_path", c.endpoint_path);
  c.model_id = j.value("model_id", "");
  c.api_key_env = j.value("api_key_env", "");
  if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
  if (j.contains("reasoning_effort"))
    c.reasoning_effort = j["reasoning_effort"].get<std::string>();
  c.request_timeout_s = j.value("request_timeout_s", c.request_timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.initial_backoff_ms = j.value("initial_backoff_ms", c.initial_backoff_ms);
  return c;
}

json agent_spec_to_json(const AgentSpec& a) {
  json j;
  j["kind"] = a.kind;
  if (!a.name.empty()) j["name"] = a.name;
  if (a.kind == "scripted") {
    j["policy"] = a.policy;
    if (a.param_a != 0.0) j["param_a"] = a.param_a;
    if (a.param_b != 0.0) j["param_b"] = a.param_b;
    if (a.institution != "SI") j["institution"] = a.institution;
  } else {
    j["provider"] = provider_to_json(a.provider);
    if (!a.mock_script.empty()) j["mock_script"] = a.mock_script;
  }
  return j;
}

AgentSpec agent_spec_from_json(const json& j) {
  reject_unknown_keys(j,
                      {"kind", "name", "policy", "param_a", "param_b",
                       "institution", "provider", "mock_script"},
                      "roster entry");
  AgentSpec a;
  a.kind = j.value("kind", "scripted");
  a.name = j.value("name", "");
  a.policy = j.value("policy", "");
  a.param_a = j.value("param_a", 0.0);
  a.param_b = j.value("param_b", 0.0);
  a.institution = j.value("institution", "SI");
  if (j.contains("provider")) a.provider = provider_from_json(j["provider"]);
  a.mock_script = j.value("mock_script", "");
  if (a.kind != "scripted" && a.kind != "llm")
    throw std::runtime_error("roster kind must be scripted or llm, got '" +
                             a.kind + "'");
  if (a.kind == "scripted" && a.policy.empty())
    throw std::runtime_error("scripted roster entry needs a policy");
  return a;
}

std::map<int, int> int_map_from_json(const json& j) {
  std::map<int, int> out;
  for (const auto& [key, value] : j.items())
    out[std::stoi(key)] = value.get<int>();
  return out;
}

json int_map_to_json(const std::map<int, int>& m) {
  json j = json::object();
  for (const auto& [key, value] : m) j[std::to_string(key)] = value;
  return j;
}

}  // namespace

EngineConfig RunConfig::engine_config() const {
  EngineConfig config;
  config.params = params;
  config.seed = seed;
  config.fallback_enabled = fallback_enabled;
  auto scope = rank_scope_from_string(rank_scope);
  if (!scope) throw std::runtime_error("invalid rank_scope: " + rank_scope);
  config.rank_scope = *scope;
  config.prompt_variant = prompt_variant;
  return config;
}

void RunConfig::validate() const {
  params.validate();
  if (roster.empty()) throw std::runtime_error("roster must not be empty");
  if (static_cast<int>(roster.size()) != params.group_size)
    throw std::runtime_error(
        "roster size " + std::to_string(roster.size()) +
        " does not match group_size " + std::to_string(params.group_size));
  if (!prompt_variant_from_string(prompt_variant))
    throw std::runtime_error("invalid prompt_variant: " + prompt_variant);
  if (!rank_scope_from_string(rank_scope))
    throw std::runtime_error("invalid rank_scope: " + rank_scope);
  if (runs < 1) throw std::runtime_error("runs must be at least 1");
  if (jobs < 1) throw std::runtime_error("jobs must be at least 1");
  if (max_retries < 0) throw std::runtime_error("max_retries must be >= 0");
}

RunConfig parse_run_config_text(const std::string& json_text) {
  json doc = json::parse(json_text);
  reject_unknown_keys(doc,
                      {"schema", "params", "roster", "prompt_variant", "seed",
                       "runs", "jobs", "fallback_enabled", "rank_scope",
                       "max_retries", "out_dir", "template_dir"},
                      "config");
  RunConfig config;
  if (doc.contains("params")) config.params = params_from_json(doc["params"]);
  if (doc.contains("roster")) {
    for (const json& entry : doc["roster"])
      config.roster.push_back(agent_spec_from_json(entry));
  }
  config.prompt_variant = doc.value("prompt_variant", config.prompt_variant);
  config.seed = doc.value("seed", config.seed);
  config.runs = doc.value("runs", config.runs);
  config.jobs = doc.value("jobs", config.jobs);
  config.fallback_enabled =
      doc.value("fallback_enabled", config.fallback_enabled);
  config.rank_scope = doc.value("rank_scope", config.rank_scope);
  config.max_retries = doc.value("max_retries", config.max_retries);
  config.out_dir = doc.value("out_dir", config.out_dir);
  config.template_dir = doc.value("template_dir", config.template_dir);
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_run_config_text(os.str());
}

std::string run_config_to_text(const RunConfig& config) {
  json doc;
  doc["schema"] = "sanctsim-config/1";
  doc["params"] = params_to_json(config.params);
  doc["roster"] = json::array();
  for (const AgentSpec& a : config.roster)
    doc["roster"].push_back(agent_spec_to_json(a));
  doc["prompt_variant"] = config.prompt_variant;
  doc["seed"] = config.seed;
  doc["runs"] = config.runs;
  doc["jobs"] = config.jobs;
  doc["fallback_enabled"] = config.fallback_enabled;
  doc["rank_scope"] = config.rank_scope;
  doc["max_retries"] = config.max_retries;
  doc["out_dir"] = config.out_dir;
  if (!config.template_dir.empty())
    doc["template_dir"] = config.template_dir;
  return doc.dump(2);
}

std::vector<PolicyPtr> build_roster(const RunConfig& config, bool mock) {
  std::vector<PolicyPtr> roster;
  std::shared_ptr<const PromptKit> kit;
  auto variant = prompt_variant_from_string(config.prompt_variant);
  for (const AgentSpec& spec : config.roster) {
    if (spec.kind == "scripted") {
      auto inst = institution_from_string(spec.institution);
      if (!inst)
        throw std::runtime_error("invalid institution: " + spec.institution);
      roster.push_back(
          make_scripted_policy(spec.policy, spec.param_a, spec.param_b, *inst));
      continue;
    }
    if (!kit) {
      kit = std::make_shared<const PromptKit>(
          config.template_dir.empty() ? PromptKit::default_template_dir()
                                      : config.template_dir);
    }
    BackendPtr backend;
    if (mock) {
      backend = spec.mock_script.empty()
                    ? make_mock_decision_backend()
                    : make_scripted_backend_from_file(spec.mock_script);
    } else {
      backend = make_http_backend(spec.provider);
    }
    const std::string name =
        !spec.name.empty()
            ? spec.name
            : (spec.provider.model_id.empty() ? "llm" : spec.provider.model_id);
    roster.push_back(make_llm_policy(backend, kit, *variant,
                                     config.max_retries,
                                     config.fallback_enabled, name));
  }
  return roster;
}

// ------------------------------------------------------------- transcripts

std::string transcript_to_jsonl(const RunTranscript& t) {
  std::ostringstream os;
  json header;
  header["schema"] = kTranscriptSchema;
  header["engine_version"] = t.engine_version;
  header["seed"] = t.seed;
  header["prompt_variant"] = t.prompt_variant;
  header["rank_scope"] = to_string(t.rank_scope);
  header["fallback_enabled"] = t.fallback_enabled;
  header["roster"] = t.roster;
  header["params"] = params_to_json(t.params);
  os << header.dump() << '\n';
  for (const RoundRecord& round : t.rounds) {
    json r;
    r["round"] = round.round_number;
    r["permutation"] = round.permutation;
    r["agents"] = json::array();
    for (const AgentRoundRecord& a : round.agents) {
      json ja;
      ja["institution"] = to_string(a.institution);
      ja["institution_reasoning"] = a.institution_reasoning;
      ja["contribution"] = a.contribution;
      ja["contribution_reasoning"] = a.contribution_reasoning;
      ja["rewards_given"] = int_map_to_json(a.sanctions_given.rewards);
      ja["punishments_given"] = int_map_to_json(a.sanctions_given.punishments);
      ja["sanction_reasoning"] = a.sanction_reasoning;
      ja["rewards_received"] = a.rewards_received;
      ja["punishments_received"] = a.punishments_received;
      ja["stage1"] = a.payoff.stage1;
      ja["stage2"] = a.payoff.stage2;
      ja["total"] = a.payoff.total;
      ja["rank"] = a.rank;
      ja["fallback_institution"] = a.fallback_institution;
      ja["fallback_contribution"] = a.fallback_contribution;
      ja["fallback_sanction"] = a.fallback_sanction;
      ja["attempts_institution"] = a.attempts_institution;
      ja["attempts_contribution"] = a.attempts_contribution;
      ja["attempts_sanction"] = a.attempts_sanction;
      r["agents"].push_back(std::move(ja));
    }
    os << r.dump() << '\n';
  }
  if (t.abort) {
    json a;
    a["abort"] = {{"round", t.abort->round}, {"cause", t.abort->cause}};
    os << a.dump() << '\n';
  }
  return os.str();
}

RunTranscript transcript_from_jsonl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("empty transcript");
  json header = json::parse(line);
  if (header.value("schema", "") != kTranscriptSchema)
    throw std::runtime_error("unrecognized transcript schema");

  RunTranscript t;
  t.engine_version = header.value("engine_version", "");
  t.seed = header.value("seed", std::uint64_t{0});
  t.prompt_variant = header.value("prompt_variant", "STANDARD");
  auto scope = rank_scope_from_string(header.value("rank_scope", "global"));
  if (!scope) throw std::runtime_error("invalid rank_scope in transcript");
  t.rank_scope = *scope;
  t.fallback_enabled = header.value("fallback_enabled", true);
  t.roster = header.value("roster", std::vector<std::string>{});
  t.params = params_from_json(header.at("params"));

  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json r = json::parse(line);
    if (r.contains("abort")) {
      AbortInfo abort;
      abort.round = r["abort"].value("round", 0);
      abort.cause = r["abort"].value("cause", "");
      t.abort = abort;
      continue;
    }
    RoundRecord round;
    round.round_number = r.at("round").get<int>();
    round.permutation = r.at("permutation").get<std::vector<int>>();
    for (const json& ja : r.at("agents")) {
      AgentRoundRecord a;
      auto inst = institution_from_string(ja.at("institution"));
      if (!inst) throw std::runtime_error("invalid institution in transcript");
      a.institution = *inst;
      a.institution_reasoning = ja.value("institution_reasoning", "");
      a.contribution = ja.at("contribution").get<int>();
      a.contribution_reasoning = ja.value("contribution_reasoning", "");
      a.sanctions_given.rewards = int_map_from_json(ja.at("rewards_given"));
      a.sanctions_given.punishments =
          int_map_from_json(ja.at("punishments_given"));
      a.sanction_reasoning = ja.value("sanction_reasoning", "");
      a.rewards_received = ja.at("rewards_received").get<int>();
      a.punishments_received = ja.at("punishments_received").get<int>();
      a.payoff.stage1 = ja.at("stage1").get<double>();
      a.payoff.stage2 = ja.at("stage2").get<double>();
      a.payoff.total = ja.at("total").get<double>();
      a.rank = ja.at("rank").get<int>();
      a.fallback_institution = ja.value("fallback_institution", false);
      a.fallback_contribution = ja.value("fallback_contribution", false);
      a.fallback_sanction = ja.value("fallback_sanction", false);
      a.attempts_institution = ja.value("attempts_institution", 1);
      a.attempts_contribution = ja.value("attempts_contribution", 1);
      a.attempts_sanction = ja.value("attempts_sanction", 1);
      round.agents.push_back(std::move(a));
    }
    t.rounds.push_back(std::move(round));
  }
  return t;
}

void save_transcript(const RunTranscript& transcript,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write transcript: " + path);
  out << transcript_to_jsonl(transcript);
}

RunTranscript load_transcript(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open transcript: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return transcript_from_jsonl(os.str());
}

bool transcript_equal(const RunTranscript& a, const RunTranscript& b) {
  return transcript_to_jsonl(a) == transcript_to_jsonl(b);
}

// ------------------------------------------------------------- label store

namespace {

std::string label_key(const std::string& model, int run, int round, int agent,
                      const std::string& decision_type) {
  return model + "|" + std::to_string(run) + "|" + std::to_string(round) +
         "|" + std::to_string(agent) + "|" + decision_type;
}

}  // namespace

LabelStore::LabelStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (in && std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TaxonomyLabel label;
    label.model = j.value("model", "");
    label.run = j.value("run", 0);
    label.round = j.value("round", 0);
    label.agent = j.value("agent", 0);
    label.decision_type = j.value("decision_type", "");
    label.categories = j.value("categories", std::vector<std::string>{});
    label.confidence = j.value("confidence", 0.0);
    label.classifier_rationale = j.value("rationale", "");
    label.unclassified = j.value("unclassified", false);
    keys_.insert(label_key(label.model, label.run, label.round, label.agent,
                           label.decision_type));
    labels_.push_back(std::move(label));
  }
}

bool LabelStore::contains(const std::string& model, int run, int round,
                          int agent, const std::string& decision_type) const {
  return keys_.contains(label_key(model, run, round, agent, decision_type));
}

bool LabelStore::append(const TaxonomyLabel& label) {
  const std::string key = label_key(label.model, label.run, label.round,
                                    label.agent, label.decision_type);
  if (keys_.contains(key)) return false;
  json j;
  j["model"] = label.model;
  j["run"] = label.run;
  j["round"] = label.round;
  j["agent"] = label.agent;
  j["decision_type"] = label.decision_type;
  j["categories"] = label.categories;
  j["confidence"] = label.confidence;
  j["rationale"] = label.classifier_rationale;
  j["unclassified"] = label.unclassified;
  std::ofstream out(path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to label store: " + path_);
  out << j.dump() << '\n';
  keys_.insert(key);
  labels_.push_back(label);
  return true;
}

// -------------------------------------------------------------- ablations

AblationSuite default_ablation_suite(RunConfig base) {
  AblationSuite suite;
  suite.base = std::move(base);
  suite.variations = {
      {"baseline", {}, {}, {}, {}, {}},
      {"multiplier_1.2", 1.2, {}, {}, {}, {}},
      {"multiplier_2.5", 2.5, {}, {}, {}, {}},
      {"punishment_1_1", {}, 1, 1, {}, {}},
      {"punishment_3_3", {}, 3, 3, {}, {}},
      {"endowment_10", {}, {}, {}, 10, {}},
      {"endowment_40", {}, {}, {}, 40, {}},
  };
  return suite;
}

AblationSuite load_ablation_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ablation suite: " + path);
  json doc = json::parse(in);
  reject_unknown_keys(doc, {"base", "variations"}, "ablation suite");
  RunConfig base = parse_run_config_text(doc.at("base").dump());
  if (!doc.contains("variations")) return default_ablation_suite(base);
  AblationSuite suite;
  suite.base = std::move(base);
  for (const json& jv : doc["variations"]) {
    reject_unknown_keys(jv,
                        {"name", "multiplier", "punishment_cost",
                         "punishment_effect", "endowment", "prompt_variant"},
                        "ablation variation");
    AblationVariation v;
    v.name = jv.at("name").get<std::string>();
    if (jv.contains("multiplier")) v.multiplier = jv["multiplier"].get<double>();
    if (jv.contains("punishment_cost"))
      v.punishment_cost = jv["punishment_cost"].get<int>();
    if (jv.contains("punishment_effect"))
      v.punishment_effect = jv["punishment_effect"].get<int>();
    if (jv.contains("endowment")) v.endowment = jv["endowment"].get<int>();
    if (jv.contains("prompt_variant"))
      v.prompt_variant = jv["prompt_variant"].get<std::string>();
    suite.variations.push_back(std::move(v));
  }
  return suite;
}

RunConfig apply_variation(const RunConfig& base,
                          const AblationVariation& v) {
  RunConfig config = base;
  if (v.multiplier) config.params.multiplier = *v.multiplier;
  if (v.punishment_cost) config.params.punishment_cost = *v.punishment_cost;
  if (v.punishment_effect)
    config.params.punishment_effect = *v.punishment_effect;
  if (v.endowment) config.params.endowment_stage1 = *v.endowment;
  if (v.prompt_variant) config.prompt_variant = *v.prompt_variant;
  config.validate();
  return config;
}

}  // namespace sanctsim
