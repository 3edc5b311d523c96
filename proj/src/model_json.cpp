#include "resetsearch/model_json.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace resetsearch::model_json {

using nlohmann::json;
using namespace resetsearch::model;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ParseError, msg); }

const json& member(const json& o, const char* key, const char* where) {
  if (!o.is_object()) fail(std::string(where) + " must be an object");
  auto it = o.find(key);
  if (it == o.end()) fail(std::string(where) + " is missing \"" + key + "\"");
  return *it;
}

double num(const json& o, const char* key, const char* where) {
  const json& v = member(o, key, where);
  if (!v.is_number()) fail(std::string(where) + "." + key + " must be a number");
  return v.get<double>();
}

std::string str(const json& o, const char* key, const char* where) {
  const json& v = member(o, key, where);
  if (!v.is_string()) fail(std::string(where) + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> num_array(const json& o, const char* key, const char* where) {
  const json& v = member(o, key, where);
  if (!v.is_array()) fail(std::string(where) + "." + key + " must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) fail(std::string(where) + "." + key + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Rate rate_from_json(const json& o, double D) {
  std::string fam = str(o, "family", "rate");
  if (fam == "constant") {
    return Rate(ConstantRate{num(o, "r", "rate")});
  }
  if (fam == "powerlaw") {
    return Rate(PowerLawRate{num(o, "c", "rate"), num(o, "gamma", "rate"), num(o, "l", "rate")});
  }
  if (fam == "quaddecay") {
    return Rate(QuadDecayPolyRate{num(o, "m", "rate"), num(o, "gamma", "rate"), D});
  }
  if (fam == "stretched") {
    return Rate(StretchedExpHarmonicRate{num(o, "lambda", "rate"), num(o, "gamma", "rate"),
                                         num(o, "l", "rate"), D});
  }
  if (fam == "tabulated") {
    TabulatedRate t;
    t.grid = num_array(o, "grid", "rate");
    t.values = num_array(o, "values", "rate");
    if (o.contains("tail_plus")) {
      const json& tp = o["tail_plus"];
      t.c_plus = num(tp, "c", "rate.tail_plus");
      t.p_plus = num(tp, "p", "rate.tail_plus");
    }
    if (o.contains("tail_minus")) {
      const json& tm = o["tail_minus"];
      t.c_minus = num(tm, "c", "rate.tail_minus");
      t.p_minus = num(tm, "p", "rate.tail_minus");
    }
    return Rate{Rate::Variant(std::move(t))};
  }
  fail("unknown rate family \"" + fam + "\"");
}

Target target_from_json(const json& o) {
  std::string fam = str(o, "family", "target");
  if (fam == "exp2") return Target(TwoSidedExponential{num(o, "beta", "target")});
  if (fam == "uniform") return Target(UniformInterval{num(o, "A", "target")});
  if (fam == "triangular") return Target(TriangularInterval{num(o, "A", "target")});
  if (fam == "point") return Target(PointMass{num(o, "a", "target")});
  if (fam == "mixture") {
    Mixture m;
    m.weights = num_array(o, "weights", "target");
    const json& comps = member(o, "components", "target");
    if (!comps.is_array()) fail("target.components must be an array");
    for (const auto& c : comps) m.components.push_back(target_from_json(c));
    return Target{Target::Variant(std::move(m))};
  }
  if (fam == "tabulated") {
    TabulatedDensity t;
    t.grid = num_array(o, "grid", "target");
    t.values = num_array(o, "values", "target");
    if (o.contains("p0_plus")) t.p0_plus = num(o, "p0_plus", "target");
    if (o.contains("p0_minus")) t.p0_minus = num(o, "p0_minus", "target");
    return Target{Target::Variant(std::move(t))};
  }
  fail("unknown target family \"" + fam + "\"");
}

SupportSpec support_from_json(const json& o) {
  std::string kind = str(o, "kind", "support");
  if (kind == "full") return SupportSpec(FullLine{});
  if (kind == "interval") {
    if (o.contains("A") && !o.contains("L1") && !o.contains("L2")) {
      double A = num(o, "A", "support");
      return SupportSpec(SupportSpec::Variant(Interval{A, A}));
    }
    return SupportSpec(SupportSpec::Variant(Interval{num(o, "L1", "support"), num(o, "L2", "support")}));
  }
  fail("unknown support kind \"" + kind + "\"");
}

json parse_or_fail(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail("malformed JSON");
  return j;
}

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent), ' '); }

std::string array_to_json(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out + "]";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

ModelSpec parse_model(const std::string& text) {
  json j = parse_or_fail(text);
  if (!j.is_object()) fail("model document must be an object");
  ModelSpec spec{};
  if (j.contains("D")) {
    if (!j["D"].is_number()) fail("D must be a number");
    spec.D = j["D"].get<double>();
    (void)ModelParams(spec.D);  // validates positivity
  }
  if (j.contains("rate")) spec.rate = rate_from_json(j["rate"], spec.D);
  if (j.contains("target")) spec.target = target_from_json(j["target"]);
  if (j.contains("support")) spec.support = support_from_json(j["support"]);
  return spec;
}

Rate parse_rate(const std::string& text, double D) { return rate_from_json(parse_or_fail(text), D); }

Target parse_target(const std::string& text) { return target_from_json(parse_or_fail(text)); }

std::string rate_to_json(const Rate& rate, int indent) {
  std::string p = pad(indent);
  return std::visit(
      [&](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantRate>) {
          return "{\"family\": \"constant\", \"r\": " + format_double(f.r) + "}";
        } else if constexpr (std::is_same_v<T, PowerLawRate>) {
          return "{\"family\": \"powerlaw\", \"c\": " + format_double(f.c) +
                 ", \"gamma\": " + format_double(f.gamma) + ", \"l\": " + format_double(f.l) + "}";
        } else if constexpr (std::is_same_v<T, QuadDecayPolyRate>) {
          return "{\"family\": \"quaddecay\", \"m\": " + format_double(f.m) +
                 ", \"gamma\": " + format_double(f.gamma) + "}";
        } else if constexpr (std::is_same_v<T, StretchedExpHarmonicRate>) {
          return "{\"family\": \"stretched\", \"lambda\": " + format_double(f.lambda) +
                 ", \"gamma\": " + format_double(f.gamma) + ", \"l\": " + format_double(f.l) + "}";
        } else {
          std::string out = "{\n" + p + "  \"family\": \"tabulated\",\n";
          out += p + "  \"grid\": " + array_to_json(f.grid) + ",\n";
          out += p + "  \"values\": " + array_to_json(f.values);
          if (f.c_plus) {
            out += ",\n" + p + "  \"tail_plus\": {\"c\": " + format_double(*f.c_plus) +
                   ", \"p\": " + format_double(*f.p_plus) + "}";
          }
          if (f.c_minus) {
            out += ",\n" + p + "  \"tail_minus\": {\"c\": " + format_double(*f.c_minus) +
                   ", \"p\": " + format_double(*f.p_minus) + "}";
          }
          return out + "\n" + p + "}";
        }
      },
      rate.family());
}

std::string target_to_json(const Target& target, int indent) {
  std::string p = pad(indent);
  return std::visit(
      [&](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TwoSidedExponential>) {
          return "{\"family\": \"exp2\", \"beta\": " + format_double(f.beta) + "}";
        } else if constexpr (std::is_same_v<T, UniformInterval>) {
          return "{\"family\": \"uniform\", \"A\": " + format_double(f.A) + "}";
        } else if constexpr (std::is_same_v<T, TriangularInterval>) {
          return "{\"family\": \"triangular\", \"A\": " + format_double(f.A) + "}";
        } else if constexpr (std::is_same_v<T, PointMass>) {
          return "{\"family\": \"point\", \"a\": " + format_double(f.a) + "}";
        } else if constexpr (std::is_same_v<T, Mixture>) {
          std::string out = "{\n" + p + "  \"family\": \"mixture\",\n";
          out += p + "  \"weights\": " + array_to_json(f.weights) + ",\n";
          out += p + "  \"components\": [\n";
          for (std::size_t i = 0; i < f.components.size(); ++i) {
            out += p + "    " + target_to_json(f.components[i], indent + 4);
            out += i + 1 < f.components.size() ? ",\n" : "\n";
          }
          return out + p + "  ]\n" + p + "}";
        } else {
          std::string out = "{\n" + p + "  \"family\": \"tabulated\",\n";
          out += p + "  \"grid\": " + array_to_json(f.grid) + ",\n";
          out += p + "  \"values\": " + array_to_json(f.values);
          if (f.p0_plus) out += ",\n" + p + "  \"p0_plus\": " + format_double(*f.p0_plus);
          if (f.p0_minus) out += ",\n" + p + "  \"p0_minus\": " + format_double(*f.p0_minus);
          return out + "\n" + p + "}";
        }
      },
      target.family());
}

std::string support_to_json(const SupportSpec& support, int) {
  if (support.is_full_line()) return "{\"kind\": \"full\"}";
  const Interval& iv = std::get<Interval>(support.value());
  return "{\"kind\": \"interval\", \"L1\": " + format_double(iv.L1) +
         ", \"L2\": " + format_double(iv.L2) + "}";
}

std::string model_to_json(const ModelSpec& spec) {
  std::string out = "{\n";
  out += "  \"D\": " + format_double(spec.D);
  if (spec.rate) out += ",\n  \"rate\": " + rate_to_json(*spec.rate, 2);
  if (spec.target) out += ",\n  \"target\": " + target_to_json(*spec.target, 2);
  out += ",\n  \"support\": " + support_to_json(spec.support, 2);
  return out + "\n}\n";
}

}  // namespace resetsearch::model_json
