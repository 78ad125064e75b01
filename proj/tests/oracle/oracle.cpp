#include "oracle.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace edmm::oracle {

namespace {

enum class Pg { Unmapped, Mapped, Allocated, Cached, TrimPending };

constexpr std::int64_t kFree = -1;
constexpr std::int64_t kBinary = -2;

const char* const kCrossingNames[] = {"eenter", "eexit", "aex", "eresume", "pf",
                                      "syscall_enter", "syscall_return", "ipi"};

struct Fail {
  ErrorKind kind;
};

class Interp {
 public:
  Interp(const StrategyConfig& cfg, std::uint64_t pool) : cfg_(cfg), n_(pool) {
    cfg.validate(pool);
    st_.assign(n_, Pg::Unmapped);
    owner_.assign(n_, kFree);
    stamp_.assign(n_, 0);
    load_end_ = cfg.mode == Mode::kStatic ? n_ : cfg.binary_pages + cfg.prealloc_pages;
    for (std::uint64_t p = 0; p < load_end_; ++p) {
      st_[p] = Pg::Mapped;
      ++load_["eadd_measure"];
    }
    for (std::uint64_t p = 0; p < cfg.binary_pages; ++p) {
      st_[p] = Pg::Allocated;
      owner_[p] = kBinary;
    }
    if (cfg.lazy_free) {
      limit_ = static_cast<std::uint64_t>(static_cast<unsigned __int128>(cfg.lazy_free->num) * n_ /
                                          cfg.lazy_free->den);
    }
    bump_peak();
  }

  void run(const TraceEvent& e) {
    if (e.op == TraceOp::kMmap) {
      mmap(e.len);
    } else {
      if (e.region >= bases_.size()) throw Fail{ErrorKind::kValidation};
      const auto [base, len] = bases_[e.region];
      if (e.offset > len || e.len > len - e.offset) throw Fail{ErrorKind::kInvalidArgument};
      if (e.op == TraceOp::kMunmap) {
        munmap(e.region, base + e.offset, base + e.offset + e.len);
      } else {
        access(e.region, base + e.offset, base + e.offset + e.len);
      }
    }
    bump_peak();
  }

  std::map<std::string, std::uint64_t> runtime() const {
    auto out = rt_;
    std::uint64_t crossings = 0;
    for (const char* name : kCrossingNames) {
      auto it = rt_.find(name);
      if (it != rt_.end()) crossings += it->second;
    }
    if (crossings) out["crossings"] = crossings;
    return out;
  }
  const std::map<std::string, std::uint64_t>& load() const { return load_; }
  std::uint64_t peak() const { return peak_; }

 private:
  void tally(const char* name, std::uint64_t times = 1) {
    if (times) rt_[name] += times;
  }

  // Event sequences, one protocol at a time.
  void fig_eager_page() {
    for (const char* e : {"aex", "pf", "eaug", "eresume", "eaccept"}) tally(e);
  }
  void fig_demand(std::uint64_t k) {
    if (k == 1) {
      for (const char* e : {"aex", "pf", "eaug", "eenter", "eaccept", "eexit", "eresume"}) tally(e);
      return;
    }
    tally("aex");
    tally("pf");
    tally("eaug");
    tally("syscall_enter");
    tally("eaug", k - 1);
    tally("syscall_return");
    tally("eenter");
    tally("eaccept", k);
    tally("eexit");
    tally("eresume");
  }
  void fig_batch(std::uint64_t k) {
    tally("eexit");
    tally("syscall_enter");
    tally("eaug", k);
    tally("syscall_return");
    tally("eenter");
    tally("eaccept", k);
  }
  void fig_remove(std::uint64_t k) {
    tally("eexit");
    tally("syscall_enter");
    tally("trim", k);
    tally("etrack");
    tally("ipi", cfg_.enclave_threads);
    tally("syscall_return");
    tally("eenter");
    tally("eaccept", k);
    tally("eexit");
    tally("syscall_enter");
    tally("eremove", k);
    tally("syscall_return");
    tally("eenter");
  }

  void bump_peak() {
    std::uint64_t mapped = 0;
    for (Pg s : st_) mapped += s != Pg::Unmapped;
    peak_ = std::max(peak_, mapped);
  }

  // Removes the given pages, one flow per address-contiguous group.
  void remove_pages(std::vector<std::uint64_t> pages) {
    std::sort(pages.begin(), pages.end());
    std::size_t i = 0;
    while (i < pages.size()) {
      std::size_t j = i + 1;
      while (j < pages.size() && pages[j] == pages[j - 1] + 1) ++j;
      fig_remove(j - i);
      for (std::size_t q = i; q < j; ++q) st_[pages[q]] = Pg::Unmapped;
      i = j;
    }
  }

  std::uint64_t cached_count() const {
    return static_cast<std::uint64_t>(std::count(st_.begin(), st_.end(), Pg::Cached));
  }

  std::optional<std::uint64_t> place(std::uint64_t len) const {
    if (cfg_.lazy_free && !cfg_.lazy_free->is_zero()) {
      std::optional<std::uint64_t> best;
      std::uint64_t best_len = std::numeric_limits<std::uint64_t>::max();
      std::uint64_t p = 0;
      while (p < n_) {
        if (st_[p] != Pg::Cached || owner_[p] != kFree) {
          ++p;
          continue;
        }
        std::uint64_t q = p;
        while (q < n_ && st_[q] == Pg::Cached && owner_[q] == kFree) ++q;
        if (q - p >= len && q - p < best_len) {
          best = p;
          best_len = q - p;
        }
        p = q;
      }
      if (best) return best;
    }
    std::uint64_t p = 0;
    while (p < n_) {
      if (owner_[p] != kFree) {
        ++p;
        continue;
      }
      std::uint64_t q = p;
      while (q < n_ && owner_[q] == kFree) ++q;
      if (q - p >= len) return p;
      p = q;
    }
    return std::nullopt;
  }

  void mmap(std::uint64_t len) {
    auto start = place(len);
    if (!start) {
      if (cached_count() == 0) throw Fail{ErrorKind::kOutOfMemory};
      std::vector<std::uint64_t> all;
      for (std::uint64_t p = 0; p < n_; ++p) {
        if (st_[p] == Pg::Cached) all.push_back(p);
      }
      remove_pages(all);
      start = place(len);
      if (!start) throw Fail{ErrorKind::kOutOfMemory};
    }
    const std::uint64_t ord = bases_.size();
    bases_.push_back({*start, len});
    const std::uint64_t end = *start + len;
    for (std::uint64_t p = *start; p < end; ++p) owner_[p] = static_cast<std::int64_t>(ord);

    std::uint64_t p = *start;
    while (p < end) {
      if (st_[p] == Pg::Cached) {
        tally("reused_cached_pages");
        st_[p++] = Pg::Allocated;
      } else if (st_[p] == Pg::Mapped) {
        st_[p++] = Pg::Allocated;
      } else if (st_[p] == Pg::Unmapped) {
        if (cfg_.mode == Mode::kEdmmDemand) {
          ++p;
        } else if (cfg_.mode == Mode::kEdmm && cfg_.batch) {
          std::uint64_t q = p;
          while (q < end && st_[q] == Pg::Unmapped) ++q;
          fig_batch(q - p);
          for (; p < q; ++p) st_[p] = Pg::Allocated;
        } else if (cfg_.mode == Mode::kEdmm) {
          fig_eager_page();
          st_[p++] = Pg::Allocated;
        } else {
          throw Fail{ErrorKind::kProtocolViolation};
        }
      } else {
        throw Fail{ErrorKind::kProtocolViolation};
      }
    }
  }

  void access(std::uint64_t ord, std::uint64_t a, std::uint64_t b) {
    const auto me = static_cast<std::int64_t>(ord);
    std::uint64_t p = a;
    while (p < b) {
      if (owner_[p] != me) {
        // Freed stretch: fine only if lazy free still holds every page.
        std::uint64_t q = p;
        while (q < b && owner_[q] != me) {
          if (st_[q] != Pg::Cached) throw Fail{ErrorKind::kUseAfterFree};
          ++q;
        }
        tally("posix_warnings");
        tally("accessed_pages", q - p);
        p = q;
        continue;
      }
      tally("accessed_pages");
      if (st_[p] == Pg::Unmapped) {
        if (cfg_.mode != Mode::kEdmmDemand) throw Fail{ErrorKind::kProtocolViolation};
        std::uint64_t k = 0;
        while (k < cfg_.demand_n && p + k < n_ && owner_[p + k] == me && st_[p + k] == Pg::Unmapped) ++k;
        fig_demand(k);
        for (std::uint64_t q = p; q < p + k; ++q) st_[q] = Pg::Allocated;
      }
      ++p;
    }
  }

  void munmap(std::uint64_t ord, std::uint64_t a, std::uint64_t b) {
    const auto me = static_cast<std::int64_t>(ord);
    for (std::uint64_t p = a; p < b; ++p) {
      if (owner_[p] != me) throw Fail{ErrorKind::kInvalidArgument};
    }
    std::vector<std::uint64_t> doomed;
    for (std::uint64_t p = a; p < b; ++p) {
      owner_[p] = kFree;
      if (st_[p] == Pg::Unmapped) continue;
      if (p < load_end_) {
        st_[p] = Pg::Mapped;
      } else if (cfg_.lazy_free) {
        st_[p] = Pg::Cached;
        stamp_[p] = seq_++;
      } else {
        doomed.push_back(p);
      }
    }
    remove_pages(doomed);

    std::uint64_t cached = cached_count();
    std::vector<std::uint64_t> evict;
    std::vector<bool> chosen(n_, false);
    while (cached > limit_) {
      std::uint64_t oldest = n_;
      for (std::uint64_t p = 0; p < n_; ++p) {
        if (st_[p] == Pg::Cached && !chosen[p] && (oldest == n_ || stamp_[p] < stamp_[oldest])) oldest = p;
      }
      chosen[oldest] = true;
      evict.push_back(oldest);
      --cached;
    }
    remove_pages(evict);
  }

  StrategyConfig cfg_;
  std::uint64_t n_;
  std::vector<Pg> st_;
  std::vector<std::int64_t> owner_;
  std::vector<std::uint64_t> stamp_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> bases_;
  std::uint64_t load_end_ = 0;
  std::uint64_t limit_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t peak_ = 0;
  std::map<std::string, std::uint64_t> rt_;
  std::map<std::string, std::uint64_t> load_;
};

}  // namespace

OracleResult oracle_replay(const Trace& trace, const StrategyConfig& config) {
  Interp in(config, trace.header.pool_size);
  OracleResult out;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    try {
      in.run(trace.events[i]);
    } catch (const Fail& f) {
      out.error = f.kind;
      out.error_event = i;
      break;
    }
  }
  out.runtime = in.runtime();
  out.load = in.load();
  out.peak_mapped = in.peak();
  return out;
}

}  // namespace edmm::oracle
