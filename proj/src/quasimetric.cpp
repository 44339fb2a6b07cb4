#include "mad/quasimetric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "mad/errors.hpp"

namespace mad {

namespace {

void check_dims(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw ShapeError("quasimetric arguments must share a dimension >= 1, got " +
                     std::to_string(x.size()) + " and " + std::to_string(y.size()));
  }
}

}  // namespace

void QuasimetricSpec::validate() const {
  switch (kind) {
    case Kind::Simple:
      if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("simple quasimetric needs alpha in [0,1]");
      break;
    case Kind::Max:
    case Kind::Sum:
    case Kind::Mean:
      break;
    case Kind::Convex: {
      if (weights.empty() || weights.size() != members.size()) {
        throw InputError("convex quasimetric needs matching weights and members");
      }
      double total = 0.0;
      for (double w : weights) {
        if (w < 0.0) throw InputError("convex weights must be nonnegative");
        total += w;
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw InputError("convex weights must sum to 1, got " + std::to_string(total));
      }
      for (const auto& m : members) m.validate();
      break;
    }
  }
}

QuasimetricSpec QuasimetricSpec::convex(std::vector<double> weights, std::vector<QuasimetricSpec> members) {
  QuasimetricSpec s;
  s.kind = Kind::Convex;
  s.weights = std::move(weights);
  s.members = std::move(members);
  s.validate();
  return s;
}

std::vector<double> relu_reduction(std::span<const double> x, std::span<const double> y) {
  check_dims(x, y);
  std::vector<double> r(x.size());
  for (size_t i = 0; i < x.size(); ++i) r[i] = std::max(x[i] - y[i], 0.0);
  return r;
}

double d_simple(std::span<const double> x, std::span<const double> y, double alpha) {
  check_dims(x, y);
  double mx = 0.0, sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = std::max(x[i] - y[i], 0.0);
    mx = std::max(mx, r);
    sum += r;
  }
  return alpha * mx + (1.0 - alpha) * sum / static_cast<double>(x.size());
}

double d_aggregate(std::span<const double> x, std::span<const double> y, QuasimetricSpec::Kind kind) {
  check_dims(x, y);
  double mx = 0.0, sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double r = std::max(x[i] - y[i], 0.0);
    mx = std::max(mx, r);
    sum += r;
  }
  switch (kind) {
    case QuasimetricSpec::Kind::Max:
      return mx;
    case QuasimetricSpec::Kind::Sum:
      return sum;
    case QuasimetricSpec::Kind::Mean:
      return sum / static_cast<double>(x.size());
    default:
      throw InputError("d_aggregate expects max, sum or mean");
  }
}

double d_convex(std::span<const double> x, std::span<const double> y, const QuasimetricSpec& spec) {
  if (spec.kind != QuasimetricSpec::Kind::Convex) throw InputError("d_convex expects a convex spec");
  spec.validate();
  double total = 0.0;
  for (size_t k = 0; k < spec.members.size(); ++k) {
    total += spec.weights[k] * quasimetric_value(x, y, spec.members[k]);
  }
  return total;
}

double quasimetric_value(std::span<const double> x, std::span<const double> y, const QuasimetricSpec& spec) {
  switch (spec.kind) {
    case QuasimetricSpec::Kind::Simple:
      return d_simple(x, y, spec.alpha);
    case QuasimetricSpec::Kind::Max:
    case QuasimetricSpec::Kind::Sum:
    case QuasimetricSpec::Kind::Mean:
      return d_aggregate(x, y, spec.kind);
    case QuasimetricSpec::Kind::Convex:
      return d_convex(x, y, spec);
  }
  throw InputError("unknown quasimetric kind");
}

namespace {

void accumulate_gradients(std::span<const double> x, std::span<const double> y, const QuasimetricSpec& spec,
                          double scale, QuasimetricGradients& out) {
  const size_t d = x.size();
  auto active = [&](size_t i) { return x[i] - y[i] > 0.0; };  // strict: zero at the kink

  switch (spec.kind) {
    case QuasimetricSpec::Kind::Sum:
    case QuasimetricSpec::Kind::Mean: {
      const double w = spec.kind == QuasimetricSpec::Kind::Sum ? scale : scale / static_cast<double>(d);
      for (size_t i = 0; i < d; ++i) {
        if (active(i)) {
          out.dx[i] += w;
          out.dy[i] -= w;
        }
      }
      break;
    }
    case QuasimetricSpec::Kind::Max: {
      size_t best = 0;
      double best_r = 0.0;
      for (size_t i = 0; i < d; ++i) {
        const double r = std::max(x[i] - y[i], 0.0);
        if (r > best_r) {  // strict: ties keep the lowest index
          best_r = r;
          best = i;
        }
      }
      if (best_r > 0.0) {
        out.dx[best] += scale;
        out.dy[best] -= scale;
      }
      break;
    }
    case QuasimetricSpec::Kind::Simple: {
      QuasimetricSpec mx = QuasimetricSpec::max();
      QuasimetricSpec mean = QuasimetricSpec::mean();
      accumulate_gradients(x, y, mx, scale * spec.alpha, out);
      accumulate_gradients(x, y, mean, scale * (1.0 - spec.alpha), out);
      break;
    }
    case QuasimetricSpec::Kind::Convex: {
      for (size_t k = 0; k < spec.members.size(); ++k) {
        accumulate_gradients(x, y, spec.members[k], scale * spec.weights[k], out);
      }
      break;
    }
  }
}

}  // namespace

QuasimetricGradients d_gradients(std::span<const double> x, std::span<const double> y,
                                 const QuasimetricSpec& spec) {
  check_dims(x, y);
  spec.validate();
  QuasimetricGradients g;
  g.dx.assign(x.size(), 0.0);
  g.dy.assign(x.size(), 0.0);
  accumulate_gradients(x, y, spec, 1.0, g);
  return g;
}

VarId quasimetric_distance(Graph& g, VarId x, VarId y, const QuasimetricSpec& spec) {
  spec.validate();
  if (g.value(x).cols() != g.value(y).cols() || g.value(x).rows() != g.value(y).rows()) {
    throw ShapeError("quasimetric_distance: latent batches differ in shape");
  }
  switch (spec.kind) {
    case QuasimetricSpec::Kind::Simple: {
      VarId r = g.relu(g.sub(x, y));
      VarId mx = g.affine(g.row_max(r), spec.alpha, 0.0);
      VarId mean = g.affine(g.row_mean(r), 1.0 - spec.alpha, 0.0);
      return g.add(mx, mean);
    }
    case QuasimetricSpec::Kind::Max:
      return g.row_max(g.relu(g.sub(x, y)));
    case QuasimetricSpec::Kind::Sum:
      return g.row_sum(g.relu(g.sub(x, y)));
    case QuasimetricSpec::Kind::Mean:
      return g.row_mean(g.relu(g.sub(x, y)));
    case QuasimetricSpec::Kind::Convex: {
      VarId total = -1;
      for (size_t k = 0; k < spec.members.size(); ++k) {
        VarId term = g.affine(quasimetric_distance(g, x, y, spec.members[k]), spec.weights[k], 0.0);
        total = total < 0 ? term : g.add(total, term);
      }
      return total;
    }
  }
  throw InputError("unknown quasimetric kind");
}

namespace {

// Grammar: spec := name | name '(' body ')'. The convex body is a '+'-joined
// list of weight '*' spec terms.
QuasimetricSpec parse_spec(const std::string& text, size_t& pos);

void skip_spaces(const std::string& s, size_t& pos) {
  while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
}

std::string parse_name(const std::string& s, size_t& pos) {
  skip_spaces(s, pos);
  size_t start = pos;
  while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
  return s.substr(start, pos - start);
}

double parse_number(const std::string& s, size_t& pos) {
  skip_spaces(s, pos);
  size_t start = pos;
  while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                            s[pos] == '-' || s[pos] == '+' || s[pos] == 'e' || s[pos] == 'E')) {
    // Stop before a '+' that separates convex terms rather than an exponent sign.
    if ((s[pos] == '+' || s[pos] == '-') && pos > start && s[pos - 1] != 'e' && s[pos - 1] != 'E') break;
    ++pos;
  }
  if (start == pos) throw ConfigError("expected a number in quasimetric spec: " + s);
  return std::strtod(s.substr(start, pos - start).c_str(), nullptr);
}

void expect(const std::string& s, size_t& pos, char c) {
  skip_spaces(s, pos);
  if (pos >= s.size() || s[pos] != c) {
    throw ConfigError(std::string("expected '") + c + "' in quasimetric spec: " + s);
  }
  ++pos;
}

QuasimetricSpec parse_spec(const std::string& s, size_t& pos) {
  const std::string name = parse_name(s, pos);
  skip_spaces(s, pos);
  if (name == "max") return QuasimetricSpec::max();
  if (name == "sum") return QuasimetricSpec::sum();
  if (name == "mean") return QuasimetricSpec::mean();
  if (name == "simple") {
    double alpha = 0.5;
    if (pos < s.size() && s[pos] == '(') {
      ++pos;
      alpha = parse_number(s, pos);
      expect(s, pos, ')');
    }
    QuasimetricSpec spec = QuasimetricSpec::simple(alpha);
    spec.validate();
    return spec;
  }
  if (name == "convex") {
    expect(s, pos, '(');
    std::vector<double> weights;
    std::vector<QuasimetricSpec> members;
    while (true) {
      weights.push_back(parse_number(s, pos));
      expect(s, pos, '*');
      members.push_back(parse_spec(s, pos));
      skip_spaces(s, pos);
      if (pos < s.size() && s[pos] == '+') {
        ++pos;
        continue;
      }
      break;
    }
    expect(s, pos, ')');
    return QuasimetricSpec::convex(std::move(weights), std::move(members));
  }
  throw ConfigError("unknown quasimetric kind '" + name + "'");
}

}  // namespace

QuasimetricSpec QuasimetricSpec::parse(const std::string& text) {
  size_t pos = 0;
  QuasimetricSpec spec = parse_spec(text, pos);
  skip_spaces(text, pos);
  if (pos != text.size()) throw ConfigError("trailing characters in quasimetric spec: " + text);
  spec.validate();
  return spec;
}

std::string QuasimetricSpec::to_string() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Simple:
      out << "simple(" << alpha << ")";
      break;
    case Kind::Max:
      out << "max";
      break;
    case Kind::Sum:
      out << "sum";
      break;
    case Kind::Mean:
      out << "mean";
      break;
    case Kind::Convex: {
      out << "convex(";
      for (size_t k = 0; k < members.size(); ++k) {
        if (k) out << "+";
        out << weights[k] << "*" << members[k].to_string();
      }
      out << ")";
      break;
    }
  }
  return out.str();
}

}  // namespace mad
