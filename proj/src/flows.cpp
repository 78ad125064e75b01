#include "edmm/flows.hpp"

#include <algorithm>

#include "edmm/error.hpp"

namespace edmm {

namespace {

using K = EventKind;

void require_state(const PagePool& pool, Run pages, bool (*ok)(PageState), const char* flow) {
  if (pages.start > pool.size() || pages.len > pool.size() - pages.start) {
    throw SimError(ErrorKind::kInvalidArgument, std::string(flow) + ": range outside pool");
  }
  for (PageIndex p = pages.start; p < pages.end(); ++p) {
    if (!ok(pool.state(p))) {
      throw SimError(ErrorKind::kProtocolViolation,
                     std::string(flow) + ": page " + std::to_string(p) + " is " +
                         std::string(page_state_name(pool.state(p))));
    }
  }
}

bool is_unmapped(PageState s) { return s == PageState::kUnmapped; }

bool is_removable(PageState s) {
  return s == PageState::kMapped || s == PageState::kAllocated || s == PageState::kCached;
}

void emit(EventLog& log, K kind, Side side) { log.push_back(Event{kind, 0, 0, side}); }

void emit_page(EventLog& log, K kind, PageIndex page, Side side) {
  log.push_back(Event{kind, page, 1, side});
}

}  // namespace

EventLog flow_eager_accept(PagePool& pool, Run pages) {
  require_state(pool, pages, is_unmapped, "eager accept");
  EventLog log;
  log.reserve(pages.len * 5);
  for (PageIndex p = pages.start; p < pages.end(); ++p) {
    // EACCEPT on the unmapped page is itself the faulting instruction, so the
    // retried EACCEPT after ERESUME completes the flow.
    emit_page(log, K::kAex, p, Side::kEnclave);
    emit_page(log, K::kPageFault, p, Side::kKernel);
    emit_page(log, K::kEaug, p, Side::kKernel);
    emit_page(log, K::kEresume, p, Side::kRuntime);
    emit_page(log, K::kEaccept, p, Side::kEnclave);
    pool.transition(p, PageState::kMapped);
  }
  return log;
}

EventLog flow_demand(PagePool& pool, PageIndex fault_page, PageCount n, PageIndex region_limit) {
  if (n == 0) throw SimError(ErrorKind::kInvalidArgument, "demand granularity must be >= 1");
  if (fault_page >= pool.size()) throw SimError(ErrorKind::kInvalidArgument, "fault page outside pool");
  if (pool.state(fault_page) != PageState::kUnmapped) {
    throw SimError(ErrorKind::kProtocolViolation,
                   "demand fault on page " + std::to_string(fault_page) + " which is " +
                       std::string(page_state_name(pool.state(fault_page))));
  }
  if (region_limit <= fault_page) throw SimError(ErrorKind::kInvalidArgument, "empty demand window");

  const PageIndex limit = std::min<PageIndex>(region_limit, pool.size());
  PageCount k = 0;
  while (k < n && fault_page + k < limit && pool.state(fault_page + k) == PageState::kUnmapped) ++k;

  EventLog log;
  log.reserve(8 + 2 * k);
  emit_page(log, K::kAex, fault_page, Side::kEnclave);
  emit_page(log, K::kPageFault, fault_page, Side::kKernel);
  emit_page(log, K::kEaug, fault_page, Side::kKernel);
  if (k > 1) {
    // The runtime's exception path issues madvise for the following pages.
    emit(log, K::kSyscallEnter, Side::kRuntime);
    for (PageIndex p = fault_page + 1; p < fault_page + k; ++p) emit_page(log, K::kEaug, p, Side::kKernel);
    emit(log, K::kSyscallReturn, Side::kKernel);
  }
  emit(log, K::kEenter, Side::kRuntime);
  for (PageIndex p = fault_page; p < fault_page + k; ++p) emit_page(log, K::kEaccept, p, Side::kEnclave);
  emit(log, K::kEexit, Side::kEnclave);
  emit_page(log, K::kEresume, fault_page, Side::kRuntime);

  for (PageIndex p = fault_page; p < fault_page + k; ++p) pool.transition(p, PageState::kMapped);
  return log;
}

EventLog flow_batch_alloc(PagePool& pool, Run pages) {
  require_state(pool, pages, is_unmapped, "batch alloc");
  EventLog log;
  if (pages.len == 0) return log;
  log.reserve(4 + 2 * pages.len);
  emit(log, K::kEexit, Side::kEnclave);
  emit(log, K::kSyscallEnter, Side::kRuntime);
  for (PageIndex p = pages.start; p < pages.end(); ++p) emit_page(log, K::kEaug, p, Side::kKernel);
  emit(log, K::kSyscallReturn, Side::kKernel);
  emit(log, K::kEenter, Side::kRuntime);
  for (PageIndex p = pages.start; p < pages.end(); ++p) {
    emit_page(log, K::kEaccept, p, Side::kEnclave);
    pool.transition(p, PageState::kMapped);
  }
  return log;
}

EventLog flow_remove(PagePool& pool, Run pages, std::uint32_t enclave_threads) {
  require_state(pool, pages, is_removable, "remove");
  EventLog log;
  if (pages.len == 0) return log;
  log.reserve(10 + enclave_threads + 3 * pages.len);

  // First round trip: trim, track and shoot down stale TLB entries.
  emit(log, K::kEexit, Side::kEnclave);
  emit(log, K::kSyscallEnter, Side::kRuntime);
  for (PageIndex p = pages.start; p < pages.end(); ++p) {
    emit_page(log, K::kTrim, p, Side::kKernel);
    pool.transition(p, PageState::kTrimPending);
  }
  log.push_back(Event{K::kEtrack, pages.start, pages.len, Side::kKernel});
  for (std::uint32_t t = 0; t < enclave_threads; ++t) emit(log, K::kIpi, Side::kKernel);
  emit(log, K::kSyscallReturn, Side::kKernel);
  emit(log, K::kEenter, Side::kRuntime);
  for (PageIndex p = pages.start; p < pages.end(); ++p) emit_page(log, K::kEaccept, p, Side::kEnclave);

  // Second round trip: remove the accepted pages.
  emit(log, K::kEexit, Side::kEnclave);
  emit(log, K::kSyscallEnter, Side::kRuntime);
  for (PageIndex p = pages.start; p < pages.end(); ++p) {
    emit_page(log, K::kEremove, p, Side::kKernel);
    pool.transition(p, PageState::kUnmapped);
  }
  emit(log, K::kSyscallReturn, Side::kKernel);
  emit(log, K::kEenter, Side::kRuntime);
  return log;
}

EventLog flow_load(PageCount measured_pages) {
  EventLog log;
  log.reserve(measured_pages);
  for (PageIndex p = 0; p < measured_pages; ++p) emit_page(log, K::kEaddMeasure, p, Side::kRuntime);
  return log;
}

}  // namespace edmm
