#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bdc/evaluation.hpp"
#include "bdc/geometry.hpp"

namespace bdc::cli {

/// One JSON-lines row: {"image_id": ..., "class": ..., "score": ..., "bbox": [x1,y1,x2,y2]}.
struct DetectionRecord {
  std::string image_id;
  std::size_t class_id = 0;
  double score = 0.0;
  BBox box;
  /// 1-based source line; 0 for records not read from a file.
  std::size_t line = 0;
};

/// detection: classifier output, score in [0,1].
/// ranked: post-processed output, score only finite and non-negative (CoCl may exceed 1).
/// ground_truth: score optional and ignored.
enum class RowKind { detection, ranked, ground_truth };

/// Parses one row. Ground-truth rows may omit "score". Throws DataError with
/// the line number on any violation (score outside [0,1], non-finite or
/// inverted or zero-area bbox, negative class, missing field).
DetectionRecord parse_row(std::string_view text, std::size_t line_no, RowKind kind);

/// Canonical single-line form (fixed key order, shortest round-trip numbers).
std::string format_row(const DetectionRecord& rec, RowKind kind = RowKind::detection);

/// Reads every non-blank line. Missing file is a DataError.
std::vector<DetectionRecord> read_rows(const std::filesystem::path& path, RowKind kind);
std::vector<DetectionRecord> read_rows(std::istream& in, RowKind kind);

void write_rows(const std::filesystem::path& path, const std::vector<DetectionRecord>& rows,
                RowKind kind = RowKind::detection);

std::vector<GroundTruth> to_ground_truth(const std::vector<DetectionRecord>& rows);
std::vector<EvalDetection> to_eval_detections(const std::vector<DetectionRecord>& rows);

/// Image ids become file names; reject anything that is not a plain name.
void check_image_id(std::string_view id, std::size_t line_no);

}  // namespace bdc::cli
