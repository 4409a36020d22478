import pytest

from docrag.errors import DocumentDecodeError
from docrag.ingest import extract_document


def extract(html: str, knowledge_path="K", file_path="f.html"):
    return extract_document(html.encode("utf-8"), knowledge_path, file_path)


def test_simple_paragraph():
    doc = extract("<p>hi</p>")
    assert doc.body == "hi"
    assert doc.images == ()


def test_metadata_carried_through():
    doc = extract("<p>x</p>", knowledge_path="A/B", file_path="d/x.html")
    assert doc.knowledge_path == "A/B"
    assert doc.file_path == "d/x.html"
    assert doc.doc_id == "d/x.html"


def test_script_and_style_never_in_body():
    doc = extract(
        "<html><head><style>p{color:red}</style></head>"
        "<body><p>visible</p><script>var hidden = 1;</script></body></html>"
    )
    assert "hidden" not in doc.body
    assert "color" not in doc.body
    assert doc.body == "visible"


def test_block_elements_separated_by_newlines():
    doc = extract("<h1>Title</h1><p>one</p><div>two</div>")
    assert doc.body == "Title\none\ntwo"


def test_table_rows_become_lines_with_cell_separator():
    doc = extract(
        "<table><tr><td>a1</td><td>a2</td></tr><tr><td>b1</td><td>b2</td></tr></table>"
    )
    assert "a1 | a2" in doc.body.splitlines()
    assert "b1 | b2" in doc.body.splitlines()


def test_list_items_become_dash_lines():
    doc = extract("<ul><li>first</li><li>second</li></ul>")
    assert doc.body.splitlines() == ["- first", "- second"]


def test_figure_with_figcaption_titles_image():
    doc = extract(
        "<figure><img src='net.png'/><figcaption>组网图一</figcaption></figure>"
    )
    assert len(doc.images) == 1
    assert doc.images[0].image_path == "net.png"
    assert doc.images[0].title == "组网图一"


def test_figcaption_before_image_also_titles_it():
    doc = extract(
        "<figure><figcaption>拓扑图</figcaption><img src='t.png'/></figure>"
    )
    assert doc.images[0].title == "拓扑图"


def test_alt_attribute_used_when_no_caption():
    doc = extract("<p>x</p><img src='a.png' alt='架构图'/>")
    assert doc.images[0].title == "架构图"


def test_img_without_src_is_ignored():
    doc = extract("<p>x</p><img alt='nothing'/>")
    assert doc.images == ()


def test_reference_context_is_preceding_sentence():
    doc = extract("<p>前言。配置如图1所示。</p><img src='cfg.png'/><p>后文。</p>")
    assert doc.images[0].reference_context == "配置如图1所示。"


def test_entities_decoded():
    doc = extract("<p>a&amp;b &lt;c&gt;</p>")
    assert doc.body == "a&b <c>"


def test_whitespace_normalized_within_lines():
    doc = extract("<p>  a   b\t c  </p>")
    assert doc.body == "a b c"


def test_broken_markup_tolerated():
    doc = extract("<p>unclosed <b>bold<p>next para")
    assert "unclosed bold" in doc.body
    assert "next para" in doc.body


def test_undecodable_bytes_error_names_file():
    with pytest.raises(DocumentDecodeError) as excinfo:
        extract_document(b"\xff\xfe\x00bad", "K", "broken.html")
    assert "broken.html" in str(excinfo.value)


def test_body_is_nfc_normalized():
    # composed vs decomposed e-acute
    doc = extract("<p>café</p>")
    assert doc.body == "café"
