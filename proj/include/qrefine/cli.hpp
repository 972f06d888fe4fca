#pragma once

namespace qrefine {

// Full command-line front end (validate / refine / simulate / report).
// Exit codes: 0 success, 1 domain findings (hallucinations detected or a
// run that did not converge), 2 usage or I/O errors.
int run_cli(int argc, const char* const* argv);

} // namespace qrefine
