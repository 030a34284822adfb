#include "microgrid/cuts.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>

#include "json.hpp"

namespace microgrid {

std::vector<Cut> terminal_cuts(const State& x0, double kappa) {
  // max(0, k(b0 - b)) + max(0, k(h0 - h)) expanded into its four pieces.
  return {
      Cut{{0.0, 0.0, 0.0, 0.0}, 0.0},
      Cut{{-kappa, 0.0, 0.0, 0.0}, kappa * x0.b},
      Cut{{0.0, -kappa, 0.0, 0.0}, kappa * x0.h},
      Cut{{-kappa, -kappa, 0.0, 0.0}, kappa * (x0.b + x0.h)},
  };
}

ValueFunctions ValueFunctions::initial(int horizon_steps, const State& x0, double kappa) {
  if (horizon_steps < 1) throw std::invalid_argument("ValueFunctions::initial: horizon must be >= 1");
  ValueFunctions vf;
  vf.cuts.assign(static_cast<std::size_t>(horizon_steps), std::vector<Cut>{Cut{}});
  vf.cuts.push_back(terminal_cuts(x0, kappa));
  return vf;
}

std::size_t ValueFunctions::total_cuts() const {
  std::size_t n = 0;
  for (const auto& stage : cuts) n += stage.size();
  return n;
}

double evaluate_vf(const ValueFunctions& vf, int t, const State& x) {
  if (t < 0 || t > vf.horizon_steps()) throw std::out_of_range("evaluate_vf: stage outside [0, T]");
  const auto& stage = vf.cuts[static_cast<std::size_t>(t)];
  if (stage.empty()) throw std::logic_error("evaluate_vf: stage has no cuts");
  double best = -std::numeric_limits<double>::infinity();
  for (const Cut& c : stage) best = std::max(best, c(x));
  return best;
}

void write_cuts(std::ostream& out, const ValueFunctions& vf) {
  // Hand-written so numbers keep 17 significant digits.
  const auto old_precision = out.precision(17);
  out << "[\n";
  for (std::size_t t = 0; t < vf.cuts.size(); ++t) {
    out << "  [";
    for (std::size_t k = 0; k < vf.cuts[t].size(); ++k) {
      const Cut& c = vf.cuts[t][k];
      out << (k ? ",\n   " : "\n   ") << "{\"lambda\": [" << c.lambda[0] << ", " << c.lambda[1] << ", " << c.lambda[2]
          << ", " << c.lambda[3] << "], \"beta\": " << c.beta << '}';
    }
    out << "\n  ]" << (t + 1 < vf.cuts.size() ? "," : "") << '\n';
  }
  out << "]\n";
  out.precision(old_precision);
}

ValueFunctions read_cuts(std::istream& in, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, e.what());
  }
  if (!doc.is_array() || doc.size() < 2) throw ParseError(source, 0, "expected an array with one entry per stage");
  ValueFunctions vf;
  for (std::size_t t = 0; t < doc.size(); ++t) {
    std::vector<Cut> stage;
    try {
      for (const auto& item : doc[t]) {
        Cut c;
        const auto& lambda = item.at("lambda");
        if (!lambda.is_array() || lambda.size() != State::kDim) {
          throw ParseError(source, 0, "stage " + std::to_string(t) + ": lambda must have 4 entries");
        }
        for (std::size_t k = 0; k < State::kDim; ++k) c.lambda[k] = lambda[k].get<double>();
        c.beta = item.at("beta").get<double>();
        stage.push_back(c);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, 0, "stage " + std::to_string(t) + ": " + e.what());
    }
    if (stage.empty()) throw ParseError(source, 0, "stage " + std::to_string(t) + " has no cuts");
    vf.cuts.push_back(std::move(stage));
  }
  return vf;
}

}  // namespace microgrid
