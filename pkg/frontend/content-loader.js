// Content scripts load as classic scripts and cannot use static imports.
// This hand-written stub stays outside the compiled sources so no module
// wrapper gets added; it pulls the real logic in through a dynamic import
// of a web-accessible extension resource.
(() => {
  void import(chrome.runtime.getURL("dist/content.js"));
})();
