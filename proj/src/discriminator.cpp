#include "sdgzsl/discriminator.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "sdgzsl/binary_io.hpp"

namespace sdgzsl {

std::string_view decision_name(GateDecision g) { return g == GateDecision::Seen ? "seen" : "unseen"; }

std::string_view strategy_tag(Strategy s) {
  switch (s) {
    case Strategy::OL: return "ol";
    case Strategy::DL: return "dl";
    case Strategy::WS: return "ws";
  }
  throw ConfigError("unknown strategy value " + std::to_string(static_cast<int>(s)));
}

Strategy parse_strategy(std::string_view tag) {
  std::string t(tag);
  for (auto& ch : t) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "ol") return Strategy::OL;
  if (t == "dl") return Strategy::DL;
  if (t == "ws") return Strategy::WS;
  throw ConfigError("unknown strategy '" + std::string(tag) + "' (expected ol, dl or ws)");
}

ThresholdSet thresholds_from_samples(std::span<const double> d_l_samples, std::span<const double> msd_samples,
                                     double lambda, double l) {
  if (d_l_samples.empty()) throw CalibrationError("calibrate: no seen instances");
  if (d_l_samples.size() != msd_samples.size()) throw CalibrationError("calibrate: statistic arrays differ in length");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and >= 0");

  std::vector<double> ws(d_l_samples.size());
  for (std::size_t i = 0; i < ws.size(); ++i) ws[i] = d_l_samples[i] + lambda * msd_samples[i];

  const auto dl = mean_and_popstd(d_l_samples);
  const auto ms = mean_and_popstd(msd_samples);
  const auto wsum = mean_and_popstd(std::span<const double>(ws));

  ThresholdSet th;
  th.lambda = lambda;
  th.l = l;
  th.sample_count = ws.size();
  th.m_dl = dl.mean;
  th.std_dl = dl.std;
  th.m_msd = ms.mean;
  th.std_msd = ms.std;
  th.m_ws = wsum.mean;
  th.std_ws = wsum.std;
  th.r_ol = th.m_dl + th.std_dl;
  th.r_0 = th.m_msd + 2.0 * th.std_msd;
  th.r_1 = th.m_msd + th.std_msd;
  th.r_ws = th.m_ws + th.std_ws;
  return th;
}

ThresholdSet calibrate(const MlpParams& mapper, const FeatureMatrix& seen_features,
                       const EmbeddingTable& seen_embeddings, double l, double lambda) {
  if (seen_features.rows() == 0) throw CalibrationError("calibrate: no seen instances");
  const Matrix projected = forward_batch(mapper, seen_features);
  if (projected.cols() != seen_embeddings.cols()) {
    throw ShapeError("calibrate: mapper output " + std::to_string(projected.cols()) + " vs embeddings " +
                     shape_str(seen_embeddings));
  }
  std::vector<double> dls(static_cast<std::size_t>(projected.rows())), msds(dls.size());
  for (Eigen::Index i = 0; i < projected.rows(); ++i) {
    const auto s = gate_statistics(projected.row(i).transpose(), seen_embeddings, l);
    dls[static_cast<std::size_t>(i)] = s.d_l;
    msds[static_cast<std::size_t>(i)] = s.msd;
  }
  return thresholds_from_samples(dls, msds, lambda, l);
}

ThresholdSet calibrate(const MlpParams& mapper, const GzslDataset& ds, double lambda) {
  return calibrate(mapper, ds.seen_train.features, ds.seen_embeddings, ds.unified_norm_l, lambda);
}

GateDecision gate_ol(const GateStatistics& s, const ThresholdSet& th) {
  return s.d_l < th.r_ol ? GateDecision::Seen : GateDecision::Unseen;
}

DlCase dl_case(const GateStatistics& s, const ThresholdSet& th) {
  if (s.d_l < th.r_ol) return s.msd < th.r_0 ? DlCase::ShortNear : DlCase::ShortFar;
  return s.msd < th.r_1 ? DlCase::LongNear : DlCase::LongFar;
}

GateDecision gate_dl(const GateStatistics& s, const ThresholdSet& th) {
  switch (dl_case(s, th)) {
    case DlCase::ShortNear:
    case DlCase::LongNear:
      return GateDecision::Seen;
    case DlCase::ShortFar:
    case DlCase::LongFar:
      return GateDecision::Unseen;
  }
  return GateDecision::Unseen;
}

GateDecision gate_ws(const GateStatistics& s, const ThresholdSet& th) {
  return s.d_l + th.lambda * s.msd < th.r_ws ? GateDecision::Seen : GateDecision::Unseen;
}

GateDecision gate(const GateStatistics& s, const ThresholdSet& th, Strategy strategy) {
  switch (strategy) {
    case Strategy::OL: return gate_ol(s, th);
    case Strategy::DL: return gate_dl(s, th);
    case Strategy::WS: return gate_ws(s, th);
  }
  throw ConfigError("unknown strategy value " + std::to_string(static_cast<int>(strategy)));
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_thresholds(const ThresholdSet& th) {
  std::ostringstream out;
  out << "# sdgzsl thresholds v1\n";
  out << "samples=" << th.sample_count << '\n';
  out << "l=" << fmt(th.l) << '\n';
  out << "lambda=" << fmt(th.lambda) << '\n';
  out << "m_dl=" << fmt(th.m_dl) << '\n';
  out << "std_dl=" << fmt(th.std_dl) << '\n';
  out << "m_msd=" << fmt(th.m_msd) << '\n';
  out << "std_msd=" << fmt(th.std_msd) << '\n';
  out << "m_ws=" << fmt(th.m_ws) << '\n';
  out << "std_ws=" << fmt(th.std_ws) << '\n';
  out << "r_ol=" << fmt(th.r_ol) << '\n';
  out << "r_0=" << fmt(th.r_0) << '\n';
  out << "r_1=" << fmt(th.r_1) << '\n';
  out << "r_ws=" << fmt(th.r_ws) << '\n';
  return out.str();
}

ThresholdSet parse_thresholds(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LoadError("thresholds: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto num = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw LoadError(std::string("thresholds: missing key '") + key + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw LoadError(std::string("thresholds: bad value for '") + key + "'");
    }
  };
  ThresholdSet th;
  th.sample_count = static_cast<std::size_t>(num("samples"));
  th.l = num("l");
  th.lambda = num("lambda");
  th.m_dl = num("m_dl");
  th.std_dl = num("std_dl");
  th.m_msd = num("m_msd");
  th.std_msd = num("std_msd");
  th.m_ws = num("m_ws");
  th.std_ws = num("std_ws");
  th.r_ol = num("r_ol");
  th.r_0 = num("r_0");
  th.r_1 = num("r_1");
  th.r_ws = num("r_ws");
  return th;
}

void save_thresholds(const std::filesystem::path& path, const ThresholdSet& th) {
  io::write_file(path, format_thresholds(th));
}

ThresholdSet load_thresholds(const std::filesystem::path& path) {
  try {
    return parse_thresholds(io::read_file(path));
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

}  // namespace sdgzsl
