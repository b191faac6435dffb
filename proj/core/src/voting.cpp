#include "asc/voting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "asc/error.hpp"
#include "asc/text_io.hpp"

namespace asc::vote {

int NegativeFlagVector::count() const {
  return static_cast<int>(std::count(flags.begin(), flags.end(), std::uint8_t{1}));
}

void PunishmentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  if (threshold_den <= 0 || threshold_num <= 0 || threshold_num > threshold_den) {
    throw ValidationError("threshold must lie in (0, 1]");
  }
}

bool PunishmentConfig::triggers(int flag_count, int patch_count) const {
  return static_cast<long long>(flag_count) * threshold_den > static_cast<long long>(patch_count) * threshold_num;
}

PunishmentConfig PunishmentConfig::with_threshold(double gamma, const std::string& threshold) {
  PunishmentConfig cfg;
  cfg.gamma = gamma;
  const std::string t = io::trim(threshold);
  const auto slash = t.find('/');
  if (slash != std::string::npos) {
    cfg.threshold_num = static_cast<int>(io::parse_int(t.substr(0, slash), "threshold numerator"));
    cfg.threshold_den = static_cast<int>(io::parse_int(t.substr(slash + 1), "threshold denominator"));
  } else {
    // Decimal thresholds are converted to a fraction over 10^6.
    const double v = io::parse_double(t, "threshold");
    cfg.threshold_den = 1000000;
    cfg.threshold_num = static_cast<int>(std::llround(v * cfg.threshold_den));
    const int g = std::gcd(cfg.threshold_num, cfg.threshold_den);
    if (g > 0) {
      cfg.threshold_num /= g;
      cfg.threshold_den /= g;
    }
  }
  cfg.validate();
  return cfg;
}

std::string PunishmentConfig::threshold_text() const {
  return std::to_string(threshold_num) + "/" + std::to_string(threshold_den);
}

VotingVector build_voting_vector(const std::string& segment_id, std::span<const std::vector<double>> rows,
                                 int class_count) {
  if (rows.empty()) throw ValidationError("segment '" + segment_id + "' has no patch predictions");
  VotingVector vv;
  vv.segment_id = segment_id;
  vv.votes.assign(static_cast<std::size_t>(class_count), 0.0);
  vv.patch_count = static_cast<int>(rows.size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != class_count) {
      throw ValidationError("segment '" + segment_id + "': prediction row has " + std::to_string(row.size()) +
                            " classes, expected " + std::to_string(class_count));
    }
    vv.votes[static_cast<std::size_t>(model::argmax(row))] += 1.0;
  }
  return vv;
}

NegativeFlagVector build_negative_flags(const std::string& segment_id, std::span<const std::vector<double>> rows,
                                        int super_id, int task_class_count) {
  if (rows.empty()) throw ValidationError("segment '" + segment_id + "' has no super predictions");
  NegativeFlagVector nf;
  nf.segment_id = segment_id;
  nf.super_id = super_id;
  nf.flags.reserve(rows.size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != task_class_count) {
      throw ValidationError("segment '" + segment_id + "': super " + std::to_string(super_id) + " row has " +
                            std::to_string(row.size()) + " outputs, expected " + std::to_string(task_class_count));
    }
    nf.flags.push_back(model::argmax(row) == task_class_count - 1 ? 1 : 0);
  }
  return nf;
}

int majority_vote(const VotingVector& vv) { return model::argmax(vv.votes); }

PunishmentOutcome punish(const VotingVector& vv, std::span<const NegativeFlagVector> flags,
                         const data::SuperCategoryPartition& partition, const PunishmentConfig& config) {
  config.validate();
  if (static_cast<int>(vv.votes.size()) != partition.class_count()) {
    throw ValidationError("voting vector length does not match the partition's class count");
  }
  if (static_cast<int>(flags.size()) != partition.size()) {
    throw ValidationError("expected " + std::to_string(partition.size()) + " negative flag vectors, got " +
                          std::to_string(flags.size()));
  }
  PunishmentOutcome out;
  out.votes = vv.votes;
  for (int j = 0; j < partition.size(); ++j) {
    const auto& nf = flags[static_cast<std::size_t>(j)];
    if (nf.super_id != j) throw ValidationError("negative flag vectors must be ordered by super id");
    if (static_cast<int>(nf.flags.size()) != vv.patch_count) {
      throw ValidationError("segment '" + vv.segment_id + "': super " + std::to_string(j) + " has " +
                            std::to_string(nf.flags.size()) + " flags, expected PN = " +
                            std::to_string(vv.patch_count));
    }
    if (config.triggers(nf.count(), vv.patch_count)) {
      for (int member : partition.category(j).members) out.votes[static_cast<std::size_t>(member)] *= config.gamma;
      out.punished_supers.push_back(j);
    }
  }
  out.decision = model::argmax(out.votes);
  return out;
}

int punishment_vote(const VotingVector& vv, std::span<const NegativeFlagVector> flags,
                    const data::SuperCategoryPartition& partition, const PunishmentConfig& config) {
  return punish(vv, flags, partition, config).decision;
}

std::vector<SegmentDecision> vote_dataset(const model::PredictionMatrix& base,
                                          std::span<const model::PredictionMatrix> supers,
                                          const data::SuperCategoryPartition& partition,
                                          const PunishmentConfig& config) {
  if (base.class_count() != partition.class_count()) {
    throw ValidationError("base predictions have " + std::to_string(base.class_count()) +
                          " classes but the partition covers " + std::to_string(partition.class_count()));
  }
  if (static_cast<int>(supers.size()) != partition.size()) {
    throw ValidationError("expected " + std::to_string(partition.size()) + " super prediction sets, got " +
                          std::to_string(supers.size()));
  }
  for (int j = 0; j < partition.size(); ++j) {
    if (supers[static_cast<std::size_t>(j)].class_count() != partition.category(j).task_class_count()) {
      throw ValidationError("super " + std::to_string(j) + " predictions must have " +
                            std::to_string(partition.category(j).task_class_count()) + " outputs");
    }
  }
  std::vector<SegmentDecision> out;
  for (const auto& id : base.segment_ids()) {
    const auto base_rows = base.segment_rows(id);
    std::vector<std::vector<double>> rows;
    std::vector<model::PatchKey> keys;
    for (std::size_t r : base_rows) {
      rows.push_back(base.probs(r));
      keys.push_back(base.key(r));
    }
    const VotingVector vv = build_voting_vector(id, rows, base.class_count());
    std::vector<NegativeFlagVector> flags;
    for (int j = 0; j < partition.size(); ++j) {
      const auto& sp = supers[static_cast<std::size_t>(j)];
      std::vector<std::vector<double>> srows;
      for (const auto& k : keys) {
        const auto r = sp.find(k);
        if (!r) {
          throw ValidationError("super " + std::to_string(j) + " is missing patch (" + k.segment_id + ", " +
                                std::to_string(k.channel) + ", " + std::to_string(k.patch_index) + ")");
        }
        srows.push_back(sp.probs(*r));
      }
      if (sp.segment_rows(id).size() != keys.size()) {
        throw ValidationError("segment '" + id + "': super " + std::to_string(j) + " has a different PN");
      }
      flags.push_back(build_negative_flags(id, srows, j, sp.class_count()));
    }
    auto outcome = punish(vv, flags, partition, config);
    out.push_back({id, majority_vote(vv), outcome.decision, std::move(outcome.punished_supers)});
  }
  return out;
}

void save_decisions(const std::filesystem::path& path, std::span<const SegmentDecision> decisions,
                    std::span<const int> truths) {
  if (!truths.empty() && truths.size() != decisions.size()) {
    throw ValidationError("decisions and truths differ in length");
  }
  std::ostringstream out;
  out << "segment_id,truth,majority_decision,punishment_decision,punished_flags\n";
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& d = decisions[i];
    out << d.segment_id << "," << (truths.empty() ? -1 : truths[i]) << "," << d.majority << "," << d.punishment
        << ",";
    for (std::size_t j = 0; j < d.punished_supers.size(); ++j) out << (j ? ";" : "") << d.punished_supers[j];
    out << "\n";
  }
  io::write_text(path, out.str());
}

std::vector<DecisionRow> load_decisions(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || io::split_csv(lines.front()).size() != 5) {
    throw ValidationError("decisions file needs the header "
                          "'segment_id,truth,majority_decision,punishment_decision,punished_flags'");
  }
  std::vector<DecisionRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto f = io::split_csv(lines[i]);
    const std::string where = "decisions line " + std::to_string(i + 1);
    if (f.size() != 5) throw ValidationError(where + ": expected 5 columns");
    DecisionRow row;
    row.decision.segment_id = f[0];
    row.truth = static_cast<int>(io::parse_int(f[1], where));
    row.decision.majority = static_cast<int>(io::parse_int(f[2], where));
    row.decision.punishment = static_cast<int>(io::parse_int(f[3], where));
    std::stringstream ss(f[4]);
    std::string item;
    while (std::getline(ss, item, ';')) {
      if (!io::trim(item).empty()) row.decision.punished_supers.push_back(static_cast<int>(io::parse_int(item, where)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace asc::vote
