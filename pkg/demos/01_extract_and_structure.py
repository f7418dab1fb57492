"""From a saved web page to a structured policy document.

A privacy-policy page arrives as ordinary HTML: navigation, cookie
banners and footers around one element that actually carries the policy
text. This walk-through runs the full front of the pipeline on a small
synthetic page — clean the DOM, locate the policy-bearing element by
the uniformity of its children's text lengths, classify its blocks into
title levels and paragraphs, and fold them into the policy XML schema.
"""

from ppkit.extraction import ExtractionConfig, extract_pp_element
from ppkit.html_dom import body_or_root, parse_html, visible_text
from ppkit.ppxml import serialize_ppxml
from ppkit.structure import structure_document

PAGE = """<!DOCTYPE html>
<html>
<head><title>Acme — Privacy Policy</title>
<script>trackPageView();</script>
<style>nav { color: gray; }</style>
</head>
<body>
  <nav><a href="/">Home</a> <a href="/products">Products</a>
       <a href="/legal/privacy">Privacy</a></nav>
  <div id="content">
    <h1>Privacy Policy</h1>
    <p>This policy explains what information Acme collects when you use
       our products, why we collect it, and the choices you have. It
       applies to every Acme service unless that service publishes its
       own policy document instead of this one.</p>
    <h2>1. Data We Collect</h2>
    <p>We collect account details you give us directly, such as your
       name and email address, together with technical records created
       as you use the service: device identifiers, log entries, and the
       pages you visit while signed in to an Acme account.</p>
    <h2>2. How We Use Data</h2>
    <p>Collected information keeps the service running, secures your
       account against unauthorized access, and lets us measure which
       features are used so that we can decide what to improve next in
       the product and its documentation.</p>
    <h2>3. Sharing</h2>
    <p>We never sell personal information. We share it only with the
       processors named in our vendor list, each bound by contract to
       use the data solely for the service they provide to us and to
       delete it once that service ends.</p>
  </div>
  <footer>© Acme Inc. — <a href="/legal/terms">Terms</a></footer>
</body>
</html>
"""


def main() -> None:
    # Stage 1: parse and discard elements that never carry policy text
    # (scripts, styles, comments, form controls).
    tree = parse_html(PAGE)
    print(f"raw page: {len(visible_text(tree))} visible characters")

    # Stage 2: walk down from <body>, at each step comparing how uniform
    # the children's text lengths are; descend while one child dominates.
    policy = extract_pp_element(body_or_root(tree), ExtractionConfig())
    attrs = " ".join(f'{k}="{v}"' for k, v in policy.attrs.items())
    print(f"policy element: <{policy.tag} {attrs}> with "
          f"{len(policy.children)} child blocks")

    # Stage 3: classify each block (heading tags map straight to title
    # levels here; a trained block model can replace the heuristic) and
    # fold title levels into nested segments.
    doc = structure_document(policy, source="acme-privacy.html")
    print(f"document: {len(doc.children)} top-level children\n")
    print(serialize_ppxml(doc).decode("utf-8"))


if __name__ == "__main__":
    main()
