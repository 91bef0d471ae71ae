#include "ade/executor.hpp"

#include <algorithm>
#include <cctype>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ade/corpus.hpp"
#include "ade/error.hpp"

namespace ade {

std::string error_record(std::size_t line_no, std::string_view raw, std::string_view message) {
  nlohmann::json j{{"error", std::string(message)}, {"line", line_no}, {"raw", std::string(raw)}};
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

struct Job {
  std::size_t seq;
  std::size_t line_no;
  std::string text;
};

struct Result {
  std::string line;
  bool error = false;
};

}  // namespace

ExecutorStats run_ordered(std::istream& in, std::ostream& out, const LineProcessor& process,
                          const ExecutorOptions& options) {
  if (options.workers == 0) throw ConfigError("workers must be at least 1");
  const auto capacity = std::max<std::size_t>(options.max_in_flight, 1);

  std::mutex mu;
  std::condition_variable work_cv, done_cv, space_cv;
  std::deque<Job> queue;
  std::map<std::size_t, Result> done;
  bool eof = false;
  std::size_t submitted = 0, written = 0, in_flight = 0;
  ExecutorStats stats;

  auto worker = [&] {
    for (;;) {
      Job job;
      {
        std::unique_lock lock(mu);
        work_cv.wait(lock, [&] { return !queue.empty() || eof; });
        if (queue.empty()) return;
        job = std::move(queue.front());
        queue.pop_front();
      }
      Result r;
      try {
        r.line = process(job.text, job.line_no);
      } catch (const std::exception& e) {
        r.line = error_record(job.line_no, job.text, e.what());
        r.error = true;
      }
      {
        std::lock_guard lock(mu);
        done.emplace(job.seq, std::move(r));
      }
      done_cv.notify_all();
    }
  };

  auto writer = [&] {
    std::size_t since_flush = 0;
    for (;;) {
      Result r;
      {
        std::unique_lock lock(mu);
        done_cv.wait(lock, [&] { return done.count(written) || (eof && written == submitted); });
        auto it = done.find(written);
        if (it == done.end()) break;
        r = std::move(it->second);
        done.erase(it);
      }
      out << r.line << '\n';
      ++since_flush;
      if (options.flush_each || (options.flush_every > 0 && since_flush >= options.flush_every)) {
        out.flush();
        since_flush = 0;
      }
      {
        std::lock_guard lock(mu);
        ++written;
        --in_flight;
        ++stats.records;
        if (r.error) ++stats.errors;
      }
      space_cv.notify_one();
    }
    out.flush();
  };

  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < options.workers; ++i) pool.emplace_back(worker);
  std::thread writer_thread(writer);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    {
      std::unique_lock lock(mu);
      space_cv.wait(lock, [&] { return in_flight < capacity; });
      queue.push_back({submitted++, line_no, std::move(line)});
      ++in_flight;
      stats.max_in_flight = std::max(stats.max_in_flight, in_flight);
    }
    work_cv.notify_one();
  }
  {
    std::lock_guard lock(mu);
    eof = true;
  }
  work_cv.notify_all();
  done_cv.notify_all();
  for (auto& t : pool) t.join();
  done_cv.notify_all();
  writer_thread.join();
  return stats;
}

std::string process_record(const Pipeline& pipeline, std::string_view line, std::size_t line_no) {
  const auto doc = parse_jsonl_document(line, line_no);
  return run_pipeline(pipeline, doc).to_json().dump(-1, ' ', false,
                                                   nlohmann::json::error_handler_t::replace);
}

ExecutorStats run_batch(const Pipeline& pipeline, std::istream& in, std::ostream& out,
                        std::size_t workers) {
  ExecutorOptions opts;
  opts.workers = workers;
  opts.flush_every = 0;
  return run_ordered(
      in, out, [&](std::string_view l, std::size_t n) { return process_record(pipeline, l, n); },
      opts);
}

ExecutorStats run_stream(const Pipeline& pipeline, std::istream& in, std::ostream& out,
                         const ExecutorOptions& options) {
  return run_ordered(
      in, out, [&](std::string_view l, std::size_t n) { return process_record(pipeline, l, n); },
      options);
}

}  // namespace ade
