#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "ade/pipeline.hpp"

namespace ade {

struct ExecutorOptions {
  std::size_t workers = 1;
  std::size_t max_in_flight = 256;  // records read but not yet written
  std::size_t flush_every = 64;     // 0: flush only at the end
  bool flush_each = false;
};

struct ExecutorStats {
  std::size_t records = 0;
  std::size_t errors = 0;
  std::size_t max_in_flight = 0;
};

// Maps one input line to one output line; throwing turns into an error record.
using LineProcessor = std::function<std::string(std::string_view line, std::size_t line_no)>;

/// Reads lines, processes them on a fixed worker pool and writes results in
/// input order. Blank lines are skipped. At most `max_in_flight` records are
/// held in memory at any time.
ExecutorStats run_ordered(std::istream& in, std::ostream& out, const LineProcessor& process,
                          const ExecutorOptions& options);

// {"error": ..., "line": n, "raw": ...}
std::string error_record(std::size_t line_no, std::string_view raw, std::string_view message);

// JSONL documents in, one PipelineOutput JSON line per document out.
std::string process_record(const Pipeline& pipeline, std::string_view line, std::size_t line_no);

// Whole-input run; output flushed once at the end.
ExecutorStats run_batch(const Pipeline& pipeline, std::istream& in, std::ostream& out,
                        std::size_t workers);

// Continuous run; output flushed per record or per micro-batch.
ExecutorStats run_stream(const Pipeline& pipeline, std::istream& in, std::ostream& out,
                         const ExecutorOptions& options);

}  // namespace ade
