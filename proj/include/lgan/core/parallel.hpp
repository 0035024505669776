#pragma once

#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lgan {

// Persistent worker pool for data-parallel loops. Work is always split into
// fixed, thread-count-independent chunks and every output element is written
// by exactly one task, so results are bitwise reproducible regardless of how
// many workers run. Honors LGAN_THREADS (0 or 1 disables the pool).
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int worker_count() const { return static_cast<int>(workers_.size()); }

  // Runs fn(chunk_index) for chunk_index in [0, n_chunks). Blocks until all
  // chunks complete. Nested calls from inside a worker run inline.
  void run_chunks(int64_t n_chunks, const std::function<void(int64_t)>& fn) {
    if (n_chunks <= 0) return;
    if (workers_.empty() || n_chunks == 1 || inside_worker_) {
      for (int64_t i = 0; i < n_chunks; ++i) fn(i);
      return;
    }
    std::unique_lock<std::mutex> lock(mu_);
    job_fn_ = &fn;
    job_total_ = n_chunks;
    job_next_ = 0;
    job_done_ = 0;
    ++job_id_;
    cv_work_.notify_all();
    // The caller participates in its own job. While it runs chunk bodies it
    // counts as a pool thread so nested loops execute inline instead of
    // re-entering the job state.
    while (true) {
      int64_t idx = job_next_ < job_total_ ? job_next_++ : -1;
      if (idx < 0) break;
      lock.unlock();
      inside_worker_ = true;
      fn(idx);
      inside_worker_ = false;
      lock.lock();
      ++job_done_;
    }
    cv_done_.wait(lock, [&] { return job_done_ == job_total_; });
    job_fn_ = nullptr;
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

 private:
  ThreadPool() {
    int n = 0;
    if (const char* env = std::getenv("LGAN_THREADS")) {
      n = std::atoi(env);
    } else {
      n = static_cast<int>(std::thread::hardware_concurrency());
    }
    if (n < 1) n = 1;
    for (int i = 0; i + 1 < n; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stopping_ = true;
      cv_work_.notify_all();
    }
    for (auto& t : workers_) t.join();
  }

  void worker_loop() {
    inside_worker_ = true;
    std::unique_lock<std::mutex> lock(mu_);
    uint64_t seen_job = 0;
    while (true) {
      cv_work_.wait(lock, [&] { return stopping_ || (job_fn_ && job_id_ != seen_job && job_next_ < job_total_); });
      if (stopping_) return;
      seen_job = job_id_;
      while (job_fn_ && job_next_ < job_total_) {
        int64_t idx = job_next_++;
        const std::function<void(int64_t)>* fn = job_fn_;
        lock.unlock();
        (*fn)(idx);
        lock.lock();
        if (++job_done_ == job_total_) cv_done_.notify_all();
      }
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_work_, cv_done_;
  const std::function<void(int64_t)>* job_fn_ = nullptr;
  int64_t job_total_ = 0, job_next_ = 0, job_done_ = 0;
  uint64_t job_id_ = 0;
  bool stopping_ = false;
  static thread_local bool inside_worker_;
};

inline thread_local bool ThreadPool::inside_worker_ = false;

// Splits [0, n) into contiguous ranges of at most grain elements and runs
// fn(begin, end) for each. Chunk boundaries depend only on n and grain.
inline void parallel_for(int64_t n, int64_t grain, const std::function<void(int64_t, int64_t)>& fn) {
  if (n <= 0) return;
  if (grain < 1) grain = 1;
  const int64_t n_chunks = (n + grain - 1) / grain;
  if (n_chunks == 1) {
    fn(0, n);
    return;
  }
  ThreadPool::instance().run_chunks(n_chunks, [&](int64_t c) {
    const int64_t b = c * grain;
    const int64_t e = std::min(n, b + grain);
    fn(b, e);
  });
}

}  // namespace lgan
