#include <cstdio>
#include <fstream>
#include <sstream>

#include "advirl/error.hpp"
#include "advirl/experiment.hpp"

namespace advirl {

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

int MetricsReport::count_of(const std::string& label) const {
  auto it = summary.find(label);
  return it == summary.end() ? 0 : it->second.count;
}

std::string MetricsReport::count_line(const std::string& label) const {
  return std::to_string(count_of(label)) + " out of " + std::to_string(view_count()) + " views classified as " +
         label;
}

MetricsReport make_report(const std::vector<PredictionSet>& predictions) {
  MetricsReport r;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const Prediction& top = predictions[i].top();
    r.rows.push_back({i, top.label, top.confidence});
  }
  r.summary = aggregate_predictions(predictions);
  return r;
}

void add_trajectory(MetricsReport& report, const std::vector<StepLog>& history) {
  if (history.empty()) return;
  const StepLog* best = &history.front();
  for (const StepLog& h : history) {
    if (h.terms.reward > best->terms.reward) best = &h;
  }
  report.best_reward = best->terms.reward;
  report.best_step = best->step;
  report.final_reward = history.back().terms.reward;
}

std::string report_text(const MetricsReport& r) {
  std::size_t label_width = 5;
  for (const ViewRow& row : r.rows) label_width = std::max(label_width, row.label.size());
  label_width += 2;

  std::ostringstream out;
  out << "view  " << pad("top-1", label_width) << "confidence\n";
  for (const ViewRow& row : r.rows) {
    out << pad(std::to_string(row.view), 6) << pad(row.label, label_width) << fixed(row.confidence) << "\n";
  }
  out << "\n" << pad("label", label_width) << "avg_confidence  count\n";
  for (const auto& [label, s] : r.summary) {
    out << pad(label, label_width) << pad(fixed(s.avg_confidence), 16) << s.count << "\n";
  }
  out << "\n";
  for (const auto& entry : r.summary) out << r.count_line(entry.first) << "\n";
  if (r.terms) {
    const RewardTerms& t = *r.terms;
    out << "\nreward " << fixed(t.reward) << " (target " << fixed(t.target_confidence) << ", true "
        << fixed(t.true_confidence) << ", mse " << fixed(t.mean_mse, 3) << ")\n";
  }
  if (r.best_reward) {
    out << "best reward " << fixed(*r.best_reward) << " at step " << r.best_step.value_or(-1) << "\n";
  }
  if (r.final_reward) out << "final reward " << fixed(*r.final_reward) << "\n";
  return out.str();
}

std::string report_csv(const MetricsReport& r) {
  std::ostringstream out;
  out << "section,key,label,value,count\n";
  for (const ViewRow& row : r.rows) {
    out << "view," << row.view << ',' << row.label << ',' << exact(row.confidence) << ",1\n";
  }
  for (const auto& [label, s] : r.summary) {
    out << "class,avg_confidence," << label << ',' << exact(s.avg_confidence) << ',' << s.count << "\n";
  }
  if (r.terms) {
    const RewardTerms& t = *r.terms;
    out << "metric,reward,," << exact(t.reward) << ",\n";
    out << "metric,target_avg_conf,," << exact(t.target_confidence) << ',' << t.target_count << "\n";
    out << "metric,true_avg_conf,," << exact(t.true_confidence) << ',' << t.true_count << "\n";
    out << "metric,mse,," << exact(t.mean_mse) << ",\n";
  }
  if (r.best_reward) {
    out << "metric,best_reward,," << exact(*r.best_reward) << ",\n";
    out << "metric,best_step,," << r.best_step.value_or(-1) << ",\n";
  }
  if (r.final_reward) out << "metric,final_reward,," << exact(*r.final_reward) << ",\n";
  return out.str();
}

std::vector<StepLog> read_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "step,episode,reward,target_avg_conf,true_avg_conf,mse,target_count") {
    fail(ErrorCode::kMalformedFile, path.string() + ": unexpected history header");
  }
  std::vector<StepLog> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) {
      fail(ErrorCode::kMalformedFile, path.string() + ":" + std::to_string(line_no) + ": expected 7 columns");
    }
    try {
      StepLog h;
      h.step = std::stol(cells[0]);
      h.episode = std::stoi(cells[1]);
      h.terms.reward = std::stod(cells[2]);
      h.terms.target_confidence = std::stod(cells[3]);
      h.terms.true_confidence = std::stod(cells[4]);
      h.terms.mean_mse = std::stod(cells[5]);
      h.terms.target_count = std::stoi(cells[6]);
      out.push_back(h);
    } catch (const std::logic_error&) {
      fail(ErrorCode::kMalformedFile, path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

}  // namespace advirl
