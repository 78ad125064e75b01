#pragma once

#include "edmm/events.hpp"
#include "edmm/page_pool.hpp"

namespace edmm {

// Each flow checks the page states it requires, appends its events to the
// returned log, and leaves the pool in the flow's end state.

// EACCEPT-triggered fault per page; pages end Mapped. 3 crossings per page.
EventLog flow_eager_accept(PagePool& pool, Run pages);

// Demand fault at fault_page mapping up to n pages forward, clamped to the
// unmapped run below region_limit. 5 crossings for one page, 7 otherwise.
EventLog flow_demand(PagePool& pool, PageIndex fault_page, PageCount n, PageIndex region_limit);

// One madvise round trip EAUGs the whole run; the enclave then EACCEPTs it
// without faulting. 4 crossings for any non-empty run.
EventLog flow_batch_alloc(PagePool& pool, Run pages);

// Trim, track/shootdown, accept, remove. 8 crossings plus one IPI per
// enclave thread.
EventLog flow_remove(PagePool& pool, Run pages, std::uint32_t enclave_threads = 1);

// Load-time add-and-measure, no crossings.
EventLog flow_load(PageCount measured_pages);

}  // namespace edmm
