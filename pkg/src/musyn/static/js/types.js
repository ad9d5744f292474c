/** Wire types for the musyn session service. Every field here mirrors the
 * service's JSON verbatim; the UI never invents analysis data. */
export {};
