#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "bondsim/error.hpp"
#include "bondsim/harness.hpp"

namespace bondsim::harness {

namespace {

constexpr std::string_view kSchemaPrefix = "# schema: ";
constexpr std::string_view kBlocksSchema = "bondsim/blocks/v1";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) fail(ErrorCode::internal, "format_number: buffer too small");
  return std::string(buf, end);
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  fail(ErrorCode::data, "missing required column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in, std::string_view source_name) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  const std::string src(source_name);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (!have_header && line.rfind(kSchemaPrefix, 0) == 0) {
        table.schema = line.substr(kSchemaPrefix.size());
      }
      continue;
    }
    if (!have_header) {
      table.columns = split(line);
      have_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != table.columns.size()) {
      fail(ErrorCode::data, src + ": row " + std::to_string(table.rows.size() + 1) + " (line " +
                                std::to_string(line_no) + "): expected " +
                                std::to_string(table.columns.size()) + " fields, found " +
                                std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (!have_header) fail(ErrorCode::data, src + ": no header row");
  return table;
}

void write_csv(std::ostream& out, const CsvTable& table) {
  if (!table.schema.empty()) out << kSchemaPrefix << table.schema << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    out << (i ? "," : "") << table.columns[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

std::vector<BlockRow> read_blocks_csv(std::istream& in, std::string_view source_name) {
  const std::string src(source_name);
  const CsvTable table = read_csv(in, source_name);
  if (!table.schema.empty() && table.schema != kBlocksSchema) {
    fail(ErrorCode::data, src + ": schema '" + table.schema + "' is not " + std::string(kBlocksSchema));
  }
  std::size_t c_dt, c_r, c_d;
  try {
    c_dt = table.column("inter_arrival_s");
    c_r = table.column("report_hps");
    c_d = table.column("avg_difficulty_hashes");
  } catch (const Error& e) {
    fail(ErrorCode::data, src + ": " + e.what());
  }
  std::optional<std::size_t> c_h, c_t;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (table.columns[i] == "height") c_h = i;
    if (table.columns[i] == "timestamp_s") c_t = i;
  }

  std::vector<BlockRow> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto number = [&](std::size_t col) {
      const std::string& text = row[col];
      double v = 0.0;
      auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
        fail(ErrorCode::data, src + ": row " + std::to_string(r + 1) + ", column '" +
                                  table.columns[col] + "': not a finite number: '" + text + "'");
      }
      return v;
    };
    BlockRow b;
    b.height = c_h ? static_cast<std::uint64_t>(number(*c_h)) : r + 1;
    b.timestamp_s = c_t ? number(*c_t) : 0.0;
    b.interval.inter_arrival_s = number(c_dt);
    b.interval.reported_hps = number(c_r);
    b.interval.avg_difficulty = number(c_d);
    if (!(b.interval.inter_arrival_s > 0.0) || b.interval.reported_hps < 0.0 ||
        !(b.interval.avg_difficulty > 0.0)) {
      fail(ErrorCode::data, src + ": row " + std::to_string(r + 1) +
                                ": need inter_arrival_s > 0, report_hps >= 0, avg_difficulty_hashes > 0");
    }
    out.push_back(b);
  }
  return out;
}

void write_blocks_csv(std::ostream& out, const std::vector<BlockRecord>& blocks) {
  CsvTable t;
  t.schema = kBlocksSchema;
  t.columns = {"height", "miner", "timestamp_s", "inter_arrival_s", "report_hps",
               "next_commitment_hps", "avg_difficulty_hashes"};
  for (const auto& b : blocks) {
    t.rows.push_back({std::to_string(b.height), std::to_string(b.miner), format_number(b.timestamp_s),
                      format_number(b.inter_arrival_s), format_number(b.report_hps),
                      format_number(b.next_commitment_hps), format_number(b.avg_difficulty)});
  }
  write_csv(out, t);
}

std::vector<ValidationRow> validate_blocks(const std::vector<BlockRow>& blocks,
                                           const ValidityParams& params) {
  params.check();
  if (blocks.size() < params.n_long) {
    fail(ErrorCode::insufficient_data, "validate: " + std::to_string(blocks.size()) +
                                           " blocks, the long window needs " +
                                           std::to_string(params.n_long));
  }
  std::vector<ReportedInterval> intervals;
  intervals.reserve(blocks.size());
  for (const auto& b : blocks) intervals.push_back(b.interval);

  std::vector<ValidationRow> out;
  for (std::size_t k = params.n_long; k <= intervals.size(); ++k) {
    ValidationRow row;
    row.block_index = k;
    row.height = blocks[k - 1].height;
    row.timestamp_s = blocks[k - 1].timestamp_s;
    row.verdict = evaluate_valid(std::span(intervals).first(k), params);
    out.push_back(row);
  }
  return out;
}

}  // namespace bondsim::harness
