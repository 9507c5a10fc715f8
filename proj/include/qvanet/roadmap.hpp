#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qvanet::roadmap {

struct RoadmapPoint {
  double year = 0;
  double qubits = 0;
};

enum class Model { Exponential, Linear };

inline std::string to_string(Model m) { return m == Model::Exponential ? "Exponential" : "Linear"; }

struct FitParams {
  Model model = Model::Linear;
  double slope = 0;      // per-year growth; in log-qubit space for Exponential
  double intercept = 0;  // value at year 0; log-qubits for Exponential
};

struct Projection {
  Model model = Model::Linear;
  double slope = 0;
  double intercept = 0;
  double target_qubits = 0;
  double predicted_year = 0;
};

// Qubit count of the modular-exponentiation circuit for an n-bit modulus.
inline std::uint64_t qubits_required(std::uint64_t modulus_bits) {
  if (modulus_bits < 1) throw std::invalid_argument("modulus bit length must be >= 1");
  return 2 * modulus_bits + 3;
}

namespace detail {

inline void check_points(const std::vector<RoadmapPoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("regression needs at least two points");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].year > points[i - 1].year))
      throw std::invalid_argument("years must be strictly increasing");
  }
}

inline FitParams ordinary_least_squares(const std::vector<double>& xs,
                                        const std::vector<double>& ys, Model model) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("degenerate regression: all years identical");
  FitParams p;
  p.model = model;
  p.slope = sxy / sxx;
  p.intercept = my - p.slope * mx;
  return p;
}

}  // namespace detail

inline FitParams fit_linear(const std::vector<RoadmapPoint>& points) {
  detail::check_points(points);
  std::vector<double> xs, ys;
  for (const auto& pt : points) {
    xs.push_back(pt.year);
    ys.push_back(pt.qubits);
  }
  return detail::ordinary_least_squares(xs, ys, Model::Linear);
}

inline FitParams fit_exponential(const std::vector<RoadmapPoint>& points) {
  detail::check_points(points);
  std::vector<double> xs, ys;
  for (const auto& pt : points) {
    if (!(pt.qubits > 0))
      throw std::invalid_argument("exponential fit needs strictly positive qubit counts");
    xs.push_back(pt.year);
    ys.push_back(std::log(pt.qubits));
  }
  return detail::ordinary_least_squares(xs, ys, Model::Exponential);
}

// Inverse of the fitted model at the target qubit count.
inline double predict_year(const FitParams& params, double target_qubits) {
  if (!(params.slope > 0)) throw std::invalid_argument("model does not grow; no crossing year");
  if (params.model == Model::Exponential) {
    if (!(target_qubits > 0)) throw std::invalid_argument("target must be positive");
    return (std::log(target_qubits) - params.intercept) / params.slope;
  }
  return (target_qubits - params.intercept) / params.slope;
}

inline Projection project(const std::vector<RoadmapPoint>& points, Model model,
                          double target_qubits) {
  const FitParams params = model == Model::Exponential ? fit_exponential(points) : fit_linear(points);
  Projection p;
  p.model = model;
  p.slope = params.slope;
  p.intercept = params.intercept;
  p.target_qubits = target_qubits;
  p.predicted_year = predict_year(params, target_qubits);
  return p;
}

// CSV with a `year,qubits` header; lines starting with '#' are ignored.
inline std::vector<RoadmapPoint> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open roadmap data file: " + path);
  std::vector<RoadmapPoint> points;
  std::string line;
  bool saw_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!saw_header) {
      if (line != "year,qubits")
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected header 'year,qubits'");
      saw_header = true;
      continue;
    }
    std::istringstream row(line);
    std::string year_str, qubits_str;
    if (!std::getline(row, year_str, ',') || !std::getline(row, qubits_str))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
    RoadmapPoint pt;
    pt.year = std::stod(year_str);
    pt.qubits = std::stod(qubits_str);
    if (!(pt.qubits > 0))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": qubit counts must be positive");
    points.push_back(pt);
  }
  if (!saw_header) throw std::runtime_error(path + ": missing 'year,qubits' header");
  return points;
}

}  // namespace qvanet::roadmap
