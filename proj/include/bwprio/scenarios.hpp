#pragma once

#include "bwprio/config.hpp"

namespace bwprio::scenarios {

// Buyer 1 (value 3) always has one packet; buyer 2 (value 2) has a single
// packet and retries until it is sent. Capacity one packet per epoch.
ExperimentConfig example1();

// Three bursty buyers, values 10/4/1 and mean demands 10/10/30 KB/s.
// Arms: VMM and BKS over SPQ, fixed price 1 over FQ and FIFO.
ExperimentConfig fig3();

// fig3 at capacity 25 with a reserve-price sweep.
ExperimentConfig fig4();

// fig3 buyers, but buyers 1 and 2 leave at 90 s and buyer 3 quits after
// 60 s unless it was served more than 500 KB. Arms: BKS over SPQ, FQ and
// the threshold hybrid.
ExperimentConfig fig5();

// 200 identical sellers, capacity 40, buyers with values 2/3/5 and demands
// 10/10/30, no reserve.
ExperimentConfig fig6();

// Four seller types of 50: capacity 40 or 60 times total demand 50
// (values 2/3/5) or 70 (values 3/4/6).
ExperimentConfig fig7();

}  // namespace bwprio::scenarios
