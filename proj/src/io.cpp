#include "forgetting/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "forgetting/error.hpp"

namespace forgetting {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& rule) {
  throw Error(ErrorCode::SchemaViolation, where + ": " + rule);
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::string location(const fs::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line);
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = require_key(obj, key, where);
  if (!v.is_string()) schema_error(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& obj, const char* key, const std::string& where) {
  const auto& v = require_key(obj, key, where);
  if (!v.is_number_integer()) schema_error(where + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

std::string quoted(const std::string& s) { return json(s).dump(); }

}  // namespace

std::string format_real(double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "refusing to serialize a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

double parse_real(std::string_view text, const std::string& where) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    schema_error(where, "expected a finite number, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// RunBundle

void RunBundle::validate() const {
  if (phase2_epochs != retention.num_epochs()) {
    throw Error(ErrorCode::SchemaViolation, "phase2_epochs " + std::to_string(phase2_epochs) +
                                                " does not match retention epochs " +
                                                std::to_string(retention.num_epochs()));
  }
  if (phase1_epochs < 0) throw Error(ErrorCode::SchemaViolation, "phase1_epochs must be non-negative");
  if (static_cast<Eigen::Index>(meta.size()) != retention.num_samples()) {
    throw Error(ErrorCode::InconsistentIds, "run.json lists " + std::to_string(meta.size()) +
                                                " samples but retention has " +
                                                std::to_string(retention.num_samples()));
  }
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (meta[i].sample_id != retention.sample_ids()[i]) {
      throw Error(ErrorCode::InconsistentIds, "sample '" + meta[i].sample_id + "' in run.json does not match '" +
                                                  retention.sample_ids()[i] + "' in retention.csv");
    }
    if (!std::isfinite(meta[i].phase1_loss) || meta[i].phase1_loss < 0.0) {
      throw Error(ErrorCode::SchemaViolation, "phase1_loss of '" + meta[i].sample_id + "' must be finite and >= 0");
    }
  }
}

namespace {

struct RunHeader {
  std::string run_id, dataset, backbone;
  std::int64_t seed;
  int phase1_epochs, phase2_epochs;
  std::vector<SampleMeta> meta;
};

RunHeader parse_run_json(const fs::path& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_error(path.string() + " (byte " + std::to_string(e.byte) + ")", "malformed JSON");
  }
  const std::string root = path.string() + ": $";
  if (!doc.is_object()) schema_error(root, "expected a JSON object");

  RunHeader h;
  h.run_id = require_string(doc, "run_id", root);
  h.dataset = require_string(doc, "dataset", root);
  h.backbone = require_string(doc, "backbone", root);
  h.seed = require_int(doc, "seed", root);
  h.phase1_epochs = static_cast<int>(require_int(doc, "phase1_epochs", root));
  h.phase2_epochs = static_cast<int>(require_int(doc, "phase2_epochs", root));
  if (h.phase1_epochs < 0) schema_error(root + ".phase1_epochs", "must be non-negative");
  if (h.phase2_epochs < 2) schema_error(root + ".phase2_epochs", "must be at least 2");

  const auto& samples = require_key(doc, "samples", root);
  if (!samples.is_array() || samples.empty()) schema_error(root + ".samples", "expected a non-empty array");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::string where = root + ".samples[" + std::to_string(i) + "]";
    const auto& s = samples[i];
    if (!s.is_object()) schema_error(where, "expected an object");
    SampleMeta m;
    m.sample_id = require_string(s, "id", where);
    m.class_label = require_string(s, "class", where);
    const auto& loss = require_key(s, "phase1_loss", where);
    if (!loss.is_number()) schema_error(where + ".phase1_loss", "expected a number");
    m.phase1_loss = loss.get<double>();
    if (!std::isfinite(m.phase1_loss) || m.phase1_loss < 0.0) schema_error(where + ".phase1_loss", "must be finite and >= 0");
    const std::string split = require_string(s, "split", where);
    try {
      m.split = parse_split(split);
    } catch (const Error&) {
      schema_error(where + ".split", "must be train|val|test");
    }
    if (m.sample_id.empty()) schema_error(where + ".id", "must be non-empty");
    if (!seen.insert(m.sample_id).second) {
      throw Error(ErrorCode::InconsistentIds, where + ".id: duplicate sample id '" + m.sample_id + "'");
    }
    h.meta.push_back(std::move(m));
  }
  std::sort(h.meta.begin(), h.meta.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return h;
}

RetentionMatrix parse_retention_csv(const fs::path& path, int expected_epochs) {
  const auto lines = split_lines(read_text_file(path));
  if (lines.empty()) schema_error(location(path, 1), "missing header row");
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "sample_id") {
    schema_error(location(path, 1), "header must be sample_id,e0,e1,...");
  }
  const auto epochs = static_cast<int>(header.size() - 1);
  for (int e = 0; e < epochs; ++e) {
    if (header[static_cast<std::size_t>(e + 1)] != "e" + std::to_string(e)) {
      schema_error(location(path, 1), "column " + std::to_string(e + 1) + " must be named e" + std::to_string(e));
    }
  }
  if (epochs != expected_epochs) {
    schema_error(location(path, 1), "has " + std::to_string(epochs) + " epoch columns but run.json says phase2_epochs=" +
                                        std::to_string(expected_epochs));
  }

  std::vector<std::string> ids;
  std::vector<std::vector<std::uint8_t>> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const auto& line = lines[ln];
    if (line.empty()) {
      if (ln + 1 == lines.size()) break;
      schema_error(location(path, ln + 1), "blank line");
    }
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != epochs + 1) {
      schema_error(location(path, ln + 1), "expected " + std::to_string(epochs + 1) + " fields, got " +
                                               std::to_string(fields.size()));
    }
    if (fields[0].empty()) schema_error(location(path, ln + 1), "empty sample_id");
    if (!ids.empty()) {
      if (fields[0] == ids.back()) {
        throw Error(ErrorCode::InconsistentIds, location(path, ln + 1) + ": duplicate sample id '" + fields[0] + "'");
      }
      if (fields[0] < ids.back()) schema_error(location(path, ln + 1), "sample ids must be sorted ascending");
    }
    std::vector<std::uint8_t> row(static_cast<std::size_t>(epochs));
    for (int e = 0; e < epochs; ++e) {
      const auto& cell = fields[static_cast<std::size_t>(e + 1)];
      if (cell != "0" && cell != "1") {
        throw Error(ErrorCode::NonBinaryValue, location(path, ln + 1) + ": value '" + cell + "' at (row " +
                                                   std::to_string(ln) + ", column e" + std::to_string(e) +
                                                   ") is not 0 or 1");
      }
      row[static_cast<std::size_t>(e)] = cell == "1" ? 1 : 0;
    }
    ids.push_back(fields[0]);
    rows.push_back(std::move(row));
  }
  if (ids.empty()) schema_error(location(path, 2), "no sample rows");

  RetentionBits bits(static_cast<Eigen::Index>(rows.size()), epochs);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int e = 0; e < epochs; ++e) bits(static_cast<Eigen::Index>(i), e) = rows[i][static_cast<std::size_t>(e)];
  }
  return RetentionMatrix(std::move(ids), std::move(bits));
}

}  // namespace

RunBundle load_bundle(const fs::path& directory) {
  const fs::path run_path = directory / "run.json";
  const fs::path csv_path = directory / "retention.csv";
  for (const auto& p : {run_path, csv_path}) {
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingFile, "missing " + p.string());
  }
  auto header = parse_run_json(run_path);
  auto retention = parse_retention_csv(csv_path, header.phase2_epochs);

  std::unordered_map<std::string, bool> in_matrix;
  for (const auto& id : retention.sample_ids()) in_matrix.emplace(id, false);
  for (const auto& m : header.meta) {
    const auto it = in_matrix.find(m.sample_id);
    if (it == in_matrix.end()) {
      throw Error(ErrorCode::InconsistentIds,
                  run_path.string() + ": sample '" + m.sample_id + "' has no row in retention.csv");
    }
    it->second = true;
  }
  for (const auto& id : retention.sample_ids()) {
    if (!in_matrix[id]) {
      throw Error(ErrorCode::InconsistentIds, csv_path.string() + ": sample '" + id + "' is missing from run.json");
    }
  }

  RunBundle bundle{std::move(header.run_id), std::move(header.dataset), std::move(header.backbone), header.seed,
                   header.phase1_epochs,     header.phase2_epochs,     std::move(header.meta),     std::move(retention)};
  bundle.validate();
  return bundle;
}

void save_bundle(const RunBundle& bundle, const fs::path& directory) {
  bundle.validate();
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + directory.string() + ": " + ec.message());

  std::string run;
  run += "{\n";
  run += "  \"run_id\": " + quoted(bundle.run_id) + ",\n";
  run += "  \"dataset\": " + quoted(bundle.dataset) + ",\n";
  run += "  \"backbone\": " + quoted(bundle.backbone) + ",\n";
  run += "  \"seed\": " + std::to_string(bundle.seed) + ",\n";
  run += "  \"phase1_epochs\": " + std::to_string(bundle.phase1_epochs) + ",\n";
  run += "  \"phase2_epochs\": " + std::to_string(bundle.phase2_epochs) + ",\n";
  run += "  \"samples\": [\n";
  for (std::size_t i = 0; i < bundle.meta.size(); ++i) {
    const auto& m = bundle.meta[i];
    run += "    {\"id\": " + quoted(m.sample_id) + ", \"class\": " + quoted(m.class_label) +
           ", \"phase1_loss\": " + format_real(m.phase1_loss) + ", \"split\": \"" + to_string(m.split) + "\"}";
    run += i + 1 < bundle.meta.size() ? ",\n" : "\n";
  }
  run += "  ]\n}\n";
  write_text_file(directory / "run.json", run);

  const auto& r = bundle.retention;
  std::string csv = "sample_id";
  for (Eigen::Index e = 0; e < r.num_epochs(); ++e) csv += ",e" + std::to_string(e);
  csv += '\n';
  for (Eigen::Index i = 0; i < r.num_samples(); ++i) {
    csv += r.sample_ids()[static_cast<std::size_t>(i)];
    for (Eigen::Index e = 0; e < r.num_epochs(); ++e) csv += r(i, e) ? ",1" : ",0";
    csv += '\n';
  }
  write_text_file(directory / "retention.csv", csv);
}

// ---------------------------------------------------------------------------
// Reports

namespace {
std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }
}  // namespace

std::string fits_csv(std::span<const DecayFit> fits) {
  std::string out = "sample_id,lambda,fit_status,r_squared,sse\n";
  for (const auto& f : fits) {
    out += f.sample_id + "," + format_real(f.lambda) + "," + to_string(f.status) + "," + optional_real(f.r_squared) +
           "," + optional_real(f.sse) + "\n";
  }
  return out;
}

std::vector<DecayFit> parse_fits_csv(std::string_view text, const std::string& source) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != "sample_id,lambda,fit_status,r_squared,sse") {
    schema_error(source + ":1", "header must be sample_id,lambda,fit_status,r_squared,sse");
  }
  std::vector<DecayFit> fits;
  std::set<std::string> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty() && ln + 1 == lines.size()) break;
    const std::string where = source + ":" + std::to_string(ln + 1);
    const auto fields = split_csv_line(lines[ln]);
    if (fields.size() != 5) schema_error(where, "expected 5 fields");
    DecayFit f;
    f.sample_id = fields[0];
    if (f.sample_id.empty()) schema_error(where, "empty sample_id");
    if (!seen.insert(f.sample_id).second) {
      throw Error(ErrorCode::InconsistentIds, where + ": duplicate sample id '" + f.sample_id + "'");
    }
    f.lambda = parse_real(fields[1], where + " lambda");
    if (f.lambda < 0.0) schema_error(where, "lambda must be non-negative");
    try {
      f.status = parse_fit_status(fields[2]);
    } catch (const Error& e) {
      schema_error(where, e.what());
    }
    if (!fields[3].empty()) f.r_squared = parse_real(fields[3], where + " r_squared");
    if (!fields[4].empty()) f.sse = parse_real(fields[4], where + " sse");
    fits.push_back(std::move(f));
  }
  if (fits.empty()) schema_error(source, "no fit rows");
  return fits;
}

std::vector<DecayFit> load_fits(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::MissingFile, "missing " + path.string());
  return parse_fits_csv(read_text_file(path), path.string());
}

std::string retention_stats_csv(std::span<const RetentionStats> stats) {
  std::string out =
      "sample_id,first_learned_epoch,forgetting_event_count,forgetting_event_epochs,retention_rate,never_learned,"
      "never_forgotten\n";
  for (const auto& s : stats) {
    std::string epochs;
    for (std::size_t i = 0; i < s.forgetting_event_epochs.size(); ++i) {
      if (i) epochs += ';';
      epochs += std::to_string(s.forgetting_event_epochs[i]);
    }
    out += s.sample_id + "," + (s.first_learned_epoch ? std::to_string(*s.first_learned_epoch) : "") + "," +
           std::to_string(s.forgetting_event_count) + "," + epochs + "," + optional_real(s.retention_rate) + "," +
           (s.never_learned ? "1" : "0") + "," + (s.never_forgotten ? "1" : "0") + "\n";
  }
  return out;
}

std::string jaccard_csv(std::span<const JaccardPoint> points) {
  std::string out = "k_percent,top_k_size,jaccard\n";
  for (const auto& p : points) {
    out += format_real(p.k_percent) + "," + std::to_string(p.top_k_size) + "," + format_real(p.jaccard) + "\n";
  }
  return out;
}

std::string class_table_csv(std::span<const ClassForgettingRow> rows) {
  std::string out = "class_label,train_size,mean_lambda,pct_never_forgotten\n";
  for (const auto& r : rows) {
    out += r.class_label + "," + std::to_string(r.train_size) + "," + format_real(r.mean_lambda) + "," +
           format_real(r.pct_never_forgotten) + "\n";
  }
  return out;
}

std::string weights_csv(const std::vector<std::string>& sample_ids, const Eigen::Ref<const Eigen::VectorXd>& weights) {
  std::string out = "sample_id,weight\n";
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    out += sample_ids[i] + "," + format_real(weights(static_cast<Eigen::Index>(i))) + "\n";
  }
  return out;
}

std::string selection_counts_csv(const std::vector<std::string>& sample_ids,
                                 const Eigen::Ref<const Eigen::VectorXi>& counts) {
  std::string out = "sample_id,count\n";
  for (std::size_t i = 0; i < sample_ids.size(); ++i) {
    out += sample_ids[i] + "," + std::to_string(counts(static_cast<Eigen::Index>(i))) + "\n";
  }
  return out;
}

std::string truth_csv(std::span<const SynthTruth> truth) {
  std::string out = "sample_id,lambda_truth,first_learned_truth\n";
  for (const auto& t : truth) {
    out += t.sample_id + "," + format_real(t.lambda_truth) + "," + std::to_string(t.first_learned_truth) + "\n";
  }
  return out;
}

}  // namespace forgetting
