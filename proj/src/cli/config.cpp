#include "qkd/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace qkd::cli {

namespace {

using Section = std::map<std::string, std::string>;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"system",
       {"mu", "f_rep", "q", "alpha", "length", "eta", "p_dark", "n_det", "p_opt", "visibility", "p_acc",
        "passive_choice", "mu_eff"}},
      {"protocol", {"kind", "n_pulses", "seed", "q", "b92_angle"}},
      {"attack", {"strategy", "fraction", "x", "qber"}},
      {"distill", {"sample_fraction", "target_error", "pa_rounds"}},
      {"sweep", {"variable", "min", "max", "step", "mode", "n_sections", "accounting", "monte_carlo"}},
  };
  return keys;
}

std::map<std::string, Section> tokenize(std::string_view text) {
  std::map<std::string, Section> out;
  std::string current;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    std::string_view line = raw;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!schema().contains(current)) throw ConfigError(current, "unknown section");
      if (out.contains(current)) throw ConfigError(current, "duplicate section");
      out[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where, "expected key = value");
    if (current.empty()) throw ConfigError(where, "key outside of a section");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!schema().at(current).contains(key)) throw ConfigError(current + "." + key, "unknown key");
    if (value.empty()) throw ConfigError(current + "." + key, "missing value");
    if (!out[current].emplace(key, value).second) throw ConfigError(current + "." + key, "duplicate key");
  }
  return out;
}

class Reader {
 public:
  Reader(const std::map<std::string, Section>& sections, std::string name) : name_(std::move(name)) {
    if (auto it = sections.find(name_); it != sections.end()) section_ = &it->second;
  }

  bool present() const { return section_ != nullptr; }
  bool has(const std::string& key) const { return section_ && section_->contains(key); }
  std::string field(const std::string& key) const { return name_ + "." + key; }

  const std::string& text(const std::string& key) const { return section_->at(key); }

  double number(const std::string& key) const {
    const std::string& v = text(key);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) throw ConfigError(field(key), "not a number: '" + v + "'");
    return out;
  }

  std::uint64_t integer(const std::string& key) const {
    const std::string& v = text(key);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
      throw ConfigError(field(key), "not a non-negative integer: '" + v + "'");
    }
    return out;
  }

  bool boolean(const std::string& key) const {
    const std::string& v = text(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(field(key), "not a boolean: '" + v + "'");
  }

  void read(const std::string& key, double& dst) const {
    if (has(key)) dst = number(key);
  }

  /// Probability-typed field; range errors are reported against the field.
  void read(const std::string& key, Probability& dst) const {
    if (!has(key)) return;
    const double v = number(key);
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(field(key), "must lie in [0, 1]");
    dst = v;
  }

 private:
  std::string name_;
  const Section* section_ = nullptr;
};

/// Rethrows module-level config errors with the section-qualified name.
template <class F>
void qualified(const std::string& section, F&& check) {
  try {
    check();
  } catch (const ConfigError& e) {
    if (e.field().find('.') != std::string::npos) throw;
    throw ConfigError(section + "." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

attacks::AttackStrategy read_attack(const Reader& r) {
  if (!r.present() || !r.has("strategy")) return attacks::NoAttack{};
  const std::string& s = r.text("strategy");
  Probability fraction = 1.0;
  r.read("fraction", fraction);
  if (s == "none") return attacks::NoAttack{};
  if (s == "intercept_resend") return attacks::InterceptResend{fraction};
  if (s == "breidbart") return attacks::Breidbart{fraction};
  if (s == "beamsplitter") return attacks::Beamsplitter{};
  if (s == "pns") return attacks::PhotonNumberSplitting{};
  if (s == "symmetric") {
    if (r.has("x") == r.has("qber")) throw ConfigError(r.field("x"), "give exactly one of x and qber");
    if (r.has("x")) return attacks::SymmetricIndividual{r.number("x")};
    const double d = r.number("qber");
    if (!(d >= 0.0 && d <= 0.5)) throw ConfigError(r.field("qber"), "must lie in [0, 0.5]");
    return attacks::SymmetricIndividual{attacks::symmetric_attack_angle(d)};
  }
  throw ConfigError(r.field("strategy"), "unknown strategy '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  const auto sections = tokenize(text);
  ExperimentConfig cfg;

  const Reader sys(sections, "system");
  auto& p = cfg.system;
  sys.read("mu", p.mu);
  sys.read("f_rep", p.f_rep);
  sys.read("alpha", p.alpha);
  sys.read("length", p.length);
  sys.read("eta", p.eta);
  sys.read("p_dark", p.p_dark);
  sys.read("p_acc", p.p_acc);
  sys.read("mu_eff", cfg.mu_eff);
  if (sys.has("q")) p.q = sys.number("q");
  if (sys.has("n_det")) p.n_det = static_cast<int>(sys.integer("n_det"));
  if (sys.has("passive_choice")) p.passive_choice = sys.boolean("passive_choice");
  if (sys.has("p_opt") && sys.has("visibility")) {
    throw ConfigError("system.p_opt", "give either p_opt or visibility, not both");
  }
  if (sys.has("visibility")) {
    p.p_opt.reset();
    p.visibility = sys.number("visibility");
  }
  if (sys.has("p_opt")) p.p_opt = sys.number("p_opt");

  const Reader proto(sections, "protocol");
  if (proto.has("kind")) {
    const auto kind = protocols::parse_protocol(proto.text("kind"));
    if (!kind) throw ConfigError("protocol.kind", "unknown protocol '" + proto.text("kind") + "'");
    cfg.protocol = *kind;
  }
  if (proto.has("n_pulses")) cfg.n_pulses = proto.integer("n_pulses");
  if (proto.has("seed")) cfg.seed = proto.integer("seed");
  proto.read("b92_angle", cfg.b92_angle);
  if (proto.has("q")) {
    const double q = proto.number("q");
    if (sys.has("q") && q != p.q) throw ConfigError("protocol.q", "disagrees with system.q");
    p.q = q;
  }

  cfg.attack = read_attack(Reader(sections, "attack"));

  if (const Reader d(sections, "distill"); d.present()) {
    DistillSection ds;
    d.read("sample_fraction", ds.sample_fraction);
    d.read("target_error", ds.target_error);
    if (d.has("pa_rounds")) ds.pa_rounds = static_cast<int>(d.integer("pa_rounds"));
    if (!(ds.sample_fraction > 0.0 && ds.sample_fraction < 1.0)) {
      throw ConfigError("distill.sample_fraction", "must lie in (0, 1)");
    }
    if (!(ds.target_error >= 0.0 && ds.target_error <= 0.5)) {
      throw ConfigError("distill.target_error", "must lie in [0, 0.5]");
    }
    cfg.distill = ds;
  }

  if (const Reader s(sections, "sweep"); s.present()) {
    SweepSection sw;
    if (s.has("variable")) sw.variable = s.text("variable");
    s.read("min", sw.min);
    s.read("max", sw.max);
    s.read("step", sw.step);
    if (s.has("mode")) {
      const auto& m = s.text("mode");
      if (m == "rate") sw.mode = SweepMode::Rate;
      else if (m == "repeater") sw.mode = SweepMode::Repeater;
      else throw ConfigError("sweep.mode", "unknown mode '" + m + "'");
    }
    if (s.has("n_sections")) sw.n_sections = static_cast<int>(s.integer("n_sections"));
    if (s.has("accounting")) {
      const auto& a = s.text("accounting");
      if (a == "individual") sw.accounting = analytics::EveAccounting::Individual;
      else if (a == "coherent") sw.accounting = analytics::EveAccounting::Coherent;
      else if (a == "beamsplitter") sw.accounting = analytics::EveAccounting::Beamsplitter;
      else throw ConfigError("sweep.accounting", "unknown accounting '" + a + "'");
    }
    if (s.has("monte_carlo")) sw.monte_carlo = s.boolean("monte_carlo");

    static const std::set<std::string> rate_vars{"length", "mu", "eta", "p_dark", "alpha", "p_opt"};
    if (sw.mode == SweepMode::Repeater && sw.variable != "length") {
      throw ConfigError("sweep.variable", "repeater sweeps run over length");
    }
    if (!rate_vars.contains(sw.variable)) throw ConfigError("sweep.variable", "cannot sweep '" + sw.variable + "'");
    if (!(sw.step > 0.0)) throw ConfigError("sweep.step", "must be > 0");
    if (!(sw.max >= sw.min)) throw ConfigError("sweep.max", "must be >= sweep.min");
    if (sw.n_sections < 1) throw ConfigError("sweep.n_sections", "must be >= 1");
    cfg.sweep = sw;
  }

  qualified("system", [&] { cfg.system.validate(); });
  if (!(cfg.mu_eff > 0.0 && cfg.mu_eff <= 1.0)) throw ConfigError("system.mu_eff", "must lie in (0, 1]");
  if (cfg.n_pulses == 0) throw ConfigError("protocol.n_pulses", "must be > 0");
  qualified("attack", [&] { attacks::validate(cfg.attack); });
  qualified("protocol", [&] { to_session(cfg).validate(); });
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

protocols::SessionConfig to_session(const ExperimentConfig& cfg) {
  protocols::SessionConfig s;
  const auto& p = cfg.system;
  s.protocol = cfg.protocol;
  s.n_pulses = cfg.n_pulses;
  s.seed = cfg.seed;
  if (cfg.protocol == protocols::ProtocolKind::EPR_BB84 || cfg.protocol == protocols::ProtocolKind::Ekert3Basis) {
    s.source = photonics::PairSource{p.p_acc, cfg.mu_eff, p.f_rep};
  } else {
    s.source = photonics::FaintPulseSource{p.mu, p.f_rep};
  }
  s.channel = {p.alpha, p.length};
  s.detector = {p.eta, p.p_dark};
  s.n_det = p.detectors();
  s.q = p.q;
  s.p_opt = p.optical_error();
  s.attack = cfg.attack;
  s.b92_angle = cfg.b92_angle;
  return s;
}

attacks::AttackPrediction predicted_attack(const ExperimentConfig& cfg) {
  return std::visit(
      [&](const auto& a) -> attacks::AttackPrediction {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, attacks::NoAttack>) {
          return {0.0, 0.0, 0.5, std::nullopt};
        } else if constexpr (std::is_same_v<T, attacks::InterceptResend>) {
          auto pred = attacks::intercept_resend_prediction(a.fraction);
          if (cfg.protocol == protocols::ProtocolKind::SixState) {
            // one of three bases: wrong with probability 2/3; Eve's bit right
            // with 1/3 + 2/3 * 1/2
            pred.qber = attacks::six_state_full_measure_qber() * a.fraction;
            pred.eve_agreement = 2.0 / 3.0;
          }
          return pred;
        } else if constexpr (std::is_same_v<T, attacks::Breidbart>) {
          auto pred = attacks::breidbart_prediction();
          pred.qber *= a.fraction;
          pred.info_ae *= a.fraction;
          return pred;
        } else if constexpr (std::is_same_v<T, attacks::SymmetricIndividual>) {
          return attacks::symmetric_attack_prediction((1.0 - std::cos(a.x)) / 2.0);
        } else if constexpr (std::is_same_v<T, attacks::Beamsplitter>) {
          const double t = photonics::fiber_transmission({cfg.system.alpha, cfg.system.length});
          return attacks::beamsplitter_prediction(cfg.system.mu, t);
        } else {
          return {0.0, 1.0, 1.0, std::nullopt};
        }
      },
      cfg.attack);
}

}  // namespace qkd::cli
