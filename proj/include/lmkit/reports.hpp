#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmkit/analysis.hpp"

namespace lmkit {

// Machine-readable (JSON) and human-readable (aligned text) renderings of
// the analysis reports, plus the replayable disagreement fixture.

inline nlohmann::json to_json(const GlobalObjectiveReport& rep) {
  nlohmann::json per;
  for (std::size_t i = 0; i < rep.contexts.size(); ++i)
    per.push_back({{"context", rep.contexts[i]}, {"similarity", rep.similarity[i]}});
  return {{"kind", "direction_check"},
          {"weighted_mean_similarity", rep.weighted_mean},
          {"min_similarity", rep.min_similarity},
          {"contexts", per}};
}

inline std::string to_text(const GlobalObjectiveReport& rep) {
  std::size_t width = 7;  // "context"
  for (const auto& c : rep.contexts) width = std::max(width, c.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "context"
      << "  similarity\n";
  out << std::fixed << std::setprecision(6);
  for (std::size_t i = 0; i < rep.contexts.size(); ++i)
    out << std::setw(static_cast<int>(width)) << rep.contexts[i] << "  " << rep.similarity[i]
        << "\n";
  out << "weighted mean: " << rep.weighted_mean << "  min: " << rep.min_similarity << "\n";
  return out.str();
}

inline nlohmann::json to_json(const ProjectionStudy& study) {
  nlohmann::json cands;
  for (std::size_t i = 0; i < study.names.size(); ++i)
    cands.push_back({{"name", study.names[i]}, {"frobenius_error", study.errors[i]}});
  return {{"kind", "projection_study"},
          {"candidates", cands},
          {"best", study.names[study.best]}};
}

inline std::string to_text(const ProjectionStudy& study) {
  std::size_t width = 10;  // "projection"
  for (const auto& n : study.names) width = std::max(width, n.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "projection"
      << "  frobenius_error\n";
  out << std::scientific << std::setprecision(6);
  for (std::size_t i = 0; i < study.names.size(); ++i)
    out << std::setw(static_cast<int>(width)) << study.names[i] << "  " << study.errors[i]
        << (i == study.best ? "  <- best" : "") << "\n";
  return out.str();
}

inline nlohmann::json to_json(const DecodeReport& rep, const std::vector<std::string>& contexts,
                              const std::vector<std::string>& words) {
  nlohmann::json rows;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const DecodeRow& r = rep.rows[i];
    rows.push_back({{"context", contexts[i]},
                    {"argmax", words[r.argmax_id]},
                    {"decoded", words[r.decode_id]},
                    {"agree", r.agree},
                    {"sharpness", r.sharpness}});
  }
  nlohmann::json bins;
  for (std::size_t b = 0; b < rep.bin_total.size(); ++b) {
    bins.push_back({{"lo", kSharpnessBins[b]},
                    {"hi", kSharpnessBins[b + 1]},
                    {"contexts", rep.bin_total[b]},
                    {"agreements", rep.bin_agree[b]}});
  }
  return {{"kind", "decode_agreement"},
          {"agreement_rate", rep.agreement_rate},
          {"sharpness_bins", bins},
          {"rows", rows}};
}

inline std::string to_text(const DecodeReport& rep, const std::vector<std::string>& contexts,
                           const std::vector<std::string>& words) {
  std::size_t cw = 7, aw = 6, dw = 7;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    cw = std::max(cw, contexts[i].size());
    aw = std::max(aw, words[rep.rows[i].argmax_id].size());
    dw = std::max(dw, words[rep.rows[i].decode_id].size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(cw)) << "context" << "  "
      << std::setw(static_cast<int>(aw)) << "argmax" << "  " << std::setw(static_cast<int>(dw))
      << "decoded" << "  agree  sharpness\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const DecodeRow& r = rep.rows[i];
    out << std::setw(static_cast<int>(cw)) << contexts[i] << "  "
        << std::setw(static_cast<int>(aw)) << words[r.argmax_id] << "  "
        << std::setw(static_cast<int>(dw)) << words[r.decode_id] << "  "
        << std::setw(5) << (r.agree ? "yes" : "NO") << "  " << r.sharpness << "\n";
  }
  out << "agreement: " << std::setprecision(4) << 100.0 * rep.agreement_rate << "%  by sharpness:";
  for (std::size_t b = 0; b < rep.bin_total.size(); ++b) {
    out << "  [" << kSharpnessBins[b] << "," << kSharpnessBins[b + 1] << ")";
    if (rep.bin_total[b] == 0)
      out << " -";
    else
      out << " " << rep.bin_agree[b] << "/" << rep.bin_total[b];
  }
  out << "\n";
  return out.str();
}

/// Replayable fixture: one TSV row per disagreeing context.
inline void write_disagreements_tsv(std::ostream& out, const DecodeReport& rep,
                                    const std::vector<std::string>& contexts,
                                    const std::vector<std::string>& words) {
  out << "context\targmax\tdecoded\tsharpness\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const DecodeRow& r = rep.rows[i];
    if (r.agree) continue;
    out << contexts[i] << '\t' << words[r.argmax_id] << '\t' << words[r.decode_id] << '\t'
        << r.sharpness << '\n';
  }
}

}  // namespace lmkit
