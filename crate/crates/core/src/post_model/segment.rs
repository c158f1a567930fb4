use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Prose,
    Code,
}

/// A run of prose or one fenced code block.
///
/// `text` is the content (for code, the lines between the fences); `raw` is
/// the exact source span including fence lines, so joining every `raw`
/// reproduces the input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerSegment {
    pub kind: SegmentKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fence_info: Option<String>,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentWarning {
    /// Fence opened at this byte offset was never closed; the rest of the
    /// input became one code segment.
    UnterminatedFence { offset: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segmentation {
    pub segments: Vec<AnswerSegment>,
    pub warnings: Vec<SegmentWarning>,
}

impl Segmentation {
    pub fn reconstruct(&self) -> String {
        self.segments.iter().map(|s| s.raw.as_str()).collect()
    }
}

struct Fence {
    ticks: usize,
    info: Option<String>,
}

// Up to three spaces of indentation, then three or more backticks.
fn opening_fence(line: &str) -> Option<Fence> {
    let body = line.trim_end_matches(['\n', '\r']);
    let indent = body.len() - body.trim_start_matches(' ').len();
    if indent > 3 {
        return None;
    }
    let rest = &body[indent..];
    let ticks = rest.len() - rest.trim_start_matches('`').len();
    if ticks < 3 {
        return None;
    }
    let info = rest[ticks..].trim();
    if info.contains('`') {
        return None;
    }
    Some(Fence {
        ticks,
        info: (!info.is_empty()).then(|| info.to_string()),
    })
}

fn closes(line: &str, open: &Fence) -> bool {
    let body = line.trim_end_matches(['\n', '\r']);
    let indent = body.len() - body.trim_start_matches(' ').len();
    if indent > 3 {
        return false;
    }
    let rest = body[indent..].trim_end();
    rest.len() >= open.ticks && rest.bytes().all(|b| b == b'`')
}

/// Split markdown into prose and triple-backtick code segments.
pub fn segment_answer(body: &str) -> Segmentation {
    let mut out = Segmentation::default();
    let mut prose_start = 0;
    let mut offset = 0;
    // (fence, offset of the fence line, offset of the first content line)
    let mut open: Option<(Fence, usize, usize)> = None;

    for line in body.split_inclusive('\n') {
        let line_start = offset;
        offset += line.len();
        match &open {
            None => {
                if let Some(fence) = opening_fence(line) {
                    push_prose(&mut out, &body[prose_start..line_start]);
                    open = Some((fence, line_start, offset));
                }
            }
            Some((fence, _, _)) => {
                if closes(line, fence) {
                    let (fence, start, content) = open.take().unwrap();
                    out.segments.push(AnswerSegment {
                        kind: SegmentKind::Code,
                        text: body[content..line_start].to_string(),
                        fence_info: fence.info,
                        raw: body[start..offset].to_string(),
                    });
                    prose_start = offset;
                }
            }
        }
    }

    match open {
        Some((fence, start, content)) => {
            out.segments.push(AnswerSegment {
                kind: SegmentKind::Code,
                text: body[content..].to_string(),
                fence_info: fence.info,
                raw: body[start..].to_string(),
            });
            out.warnings.push(SegmentWarning::UnterminatedFence { offset: start });
        }
        None => push_prose(&mut out, &body[prose_start..]),
    }
    out
}

fn push_prose(out: &mut Segmentation, text: &str) {
    if !text.is_empty() {
        out.segments.push(AnswerSegment {
            kind: SegmentKind::Prose,
            text: text.to_string(),
            fence_info: None,
            raw: text.to_string(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_input() {
        let s = segment_answer("");
        assert!(s.segments.is_empty());
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn prose_code_prose() {
        let body = "hi\n```js\nx=1\n```\nbye";
        let s = segment_answer(body);
        assert!(s.warnings.is_empty());
        let kinds: Vec<_> = s.segments.iter().map(|g| (g.kind, g.text.as_str(), g.fence_info.as_deref())).collect();
        assert_eq!(
            kinds,
            vec![
                (SegmentKind::Prose, "hi\n", None),
                (SegmentKind::Code, "x=1\n", Some("js")),
                (SegmentKind::Prose, "bye", None),
            ]
        );
        assert_eq!(s.segments[1].raw, "```js\nx=1\n```\n");
        assert_eq!(s.reconstruct(), body);
    }

    #[test]
    fn unterminated_fence() {
        let s = segment_answer("```\na\n");
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].kind, SegmentKind::Code);
        assert_eq!(s.segments[0].text, "a\n");
        assert_eq!(s.warnings, vec![SegmentWarning::UnterminatedFence { offset: 0 }]);
    }

    #[test]
    fn adjacent_blocks_and_trailing_fence_without_newline() {
        let body = "```\na\n```\n```css\nb\n```";
        let s = segment_answer(body);
        assert_eq!(s.segments.len(), 2);
        assert_eq!(s.segments[1].fence_info.as_deref(), Some("css"));
        assert_eq!(s.segments[1].text, "b\n");
        assert!(s.warnings.is_empty());
        assert_eq!(s.reconstruct(), body);
    }

    #[test]
    fn indented_code_is_prose() {
        let s = segment_answer("text\n\n    let x = 1;\n");
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].kind, SegmentKind::Prose);
    }

    #[test]
    fn longer_fence_needs_longer_close() {
        let body = "````\n```\ninner\n```\n````\n";
        let s = segment_answer(body);
        assert_eq!(s.segments.len(), 1);
        assert_eq!(s.segments[0].text, "```\ninner\n```\n");
    }

    #[test]
    fn inline_backticks_do_not_open() {
        let s = segment_answer("use ```x``` inline\n");
        assert_eq!(s.segments[0].kind, SegmentKind::Prose);
    }

    proptest! {
        #[test]
        fn round_trip(parts in prop::collection::vec(
            prop_oneof!["[a-z =\\n]{0,12}", Just("```".to_string()), Just("```py\n".to_string()), Just("\n```\n".to_string()), Just("\r\n".to_string()), Just("é".to_string())],
            0..20,
        )) {
            let body: String = parts.concat();
            let s = segment_answer(&body);
            prop_assert_eq!(s.reconstruct(), body);
            for seg in &s.segments {
                if seg.kind == SegmentKind::Prose {
                    prop_assert!(segment_answer(&seg.raw).segments.iter().all(|x| x.kind == SegmentKind::Prose));
                }
            }
        }
    }
}
