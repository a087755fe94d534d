#include "bdc/cli/records.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "bdc/cli/errors.hpp"
#include "json.hpp"

namespace bdc::cli {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw DataError("line " + std::to_string(line_no) + ": " + what);
}

double finite_number(const Json& v, std::size_t line_no, const char* field) {
  if (!v.is_number()) fail(line_no, std::string("'") + field + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(line_no, std::string("'") + field + "' must be finite");
  return d;
}

}  // namespace

void check_image_id(std::string_view id, std::size_t line_no) {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string_view::npos ||
      id.find('\0') != std::string_view::npos) {
    fail(line_no, "image_id '" + std::string(id) + "' is not a plain file name");
  }
}

DetectionRecord parse_row(std::string_view text, std::size_t line_no, RowKind kind) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(line_no, "row must be a JSON object");

  DetectionRecord rec;
  rec.line = line_no;

  const auto id = j.find("image_id");
  if (id == j.end()) fail(line_no, "missing 'image_id'");
  if (id->is_string()) {
    rec.image_id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    rec.image_id = std::to_string(id->get<long long>());
  } else {
    fail(line_no, "'image_id' must be a string or integer");
  }
  check_image_id(rec.image_id, line_no);

  const auto cls = j.find("class");
  if (cls == j.end()) fail(line_no, "missing 'class'");
  if (!cls->is_number_integer() || cls->get<long long>() < 0) {
    fail(line_no, "'class' must be a non-negative integer");
  }
  rec.class_id = static_cast<std::size_t>(cls->get<long long>());

  const auto score = j.find("score");
  if (score != j.end()) {
    rec.score = finite_number(*score, line_no, "score");
    if (kind == RowKind::ranked) {
      if (rec.score < 0.0) fail(line_no, "'score' must be non-negative");
    } else if (rec.score < 0.0 || rec.score > 1.0) {
      fail(line_no, "'score' must lie in [0,1]");
    }
  } else if (kind != RowKind::ground_truth) {
    fail(line_no, "missing 'score'");
  } else {
    rec.score = 1.0;
  }

  const auto bbox = j.find("bbox");
  if (bbox == j.end()) fail(line_no, "missing 'bbox'");
  if (!bbox->is_array() || bbox->size() != 4) fail(line_no, "'bbox' must be an array of 4 numbers");
  rec.box = {finite_number((*bbox)[0], line_no, "bbox"), finite_number((*bbox)[1], line_no, "bbox"),
             finite_number((*bbox)[2], line_no, "bbox"), finite_number((*bbox)[3], line_no, "bbox")};
  if (!rec.box.valid()) fail(line_no, "'bbox' must satisfy x1 <= x2 and y1 <= y2");
  if (!rec.box.non_degenerate()) fail(line_no, "'bbox' must have positive area");
  return rec;
}

std::string format_row(const DetectionRecord& rec, RowKind kind) {
  Json j;
  j["image_id"] = rec.image_id;
  j["class"] = rec.class_id;
  if (kind != RowKind::ground_truth) j["score"] = rec.score;
  j["bbox"] = {rec.box.x1, rec.box.y1, rec.box.x2, rec.box.y2};
  return j.dump();
}

std::vector<DetectionRecord> read_rows(std::istream& in, RowKind kind) {
  std::vector<DetectionRecord> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(parse_row(line, line_no, kind));
  }
  return rows;
}

std::vector<DetectionRecord> read_rows(const std::filesystem::path& path, RowKind kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return read_rows(in, kind);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_rows(const std::filesystem::path& path, const std::vector<DetectionRecord>& rows,
                RowKind kind) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const DetectionRecord& r : rows) out << format_row(r, kind) << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<GroundTruth> to_ground_truth(const std::vector<DetectionRecord>& rows) {
  std::vector<GroundTruth> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.image_id, r.class_id, r.box});
  return out;
}

std::vector<EvalDetection> to_eval_detections(const std::vector<DetectionRecord>& rows) {
  std::vector<EvalDetection> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.image_id, r.class_id, r.score, r.box});
  return out;
}

}  // namespace bdc::cli
