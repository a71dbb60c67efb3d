//! File formats: profile and review CSVs in, score and summary CSVs and
//! JSON lines out.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::domain::{AgentId, ApprovalProfile, BeliefProfile, Profile, Ranking, ReviewAssignment};
use crate::error::{Error, Result};
use crate::experiments::{MadSummary, RecallRow, ScorePrediction};
use crate::rbts::{ScoreTable, SubLottery};

/// Reads `agent_id,rank_1,rank_2,...` rows (best first). Rows may have
/// different lengths; agent ids must be exactly `1..=n`.
pub fn read_profile<R: Read>(reader: R) -> Result<Profile> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows: Vec<(AgentId, Ranking)> = Vec::new();
    for record in csv.records() {
        let record = record?;
        let mut fields = record.iter().filter(|f| !f.is_empty());
        let agent = parse_id(fields.next().unwrap_or(""), "agent_id")?;
        let order = fields.map(|f| parse_id(f, "rank")).collect::<Result<Vec<_>>>()?;
        rows.push((agent, Ranking::new(order)?));
    }
    rows.sort_by_key(|(a, _)| *a);
    for (idx, (agent, _)) in rows.iter().enumerate() {
        if agent.index() != idx {
            return Err(Error::InvalidProfile(format!(
                "agent ids must be 1..={} without gaps or repeats (found {agent})",
                rows.len()
            )));
        }
    }
    Profile::new(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn write_profile<W: Write>(writer: W, profile: &Profile) -> Result<()> {
    let mut csv = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    let width = profile.rankings().iter().map(Ranking::len).max().unwrap_or(0);
    let mut header = vec!["agent_id".to_string()];
    header.extend((1..=width).map(|r| format!("rank_{r}")));
    csv.write_record(&header)?;
    for a in AgentId::all(profile.n()) {
        let mut row = vec![a.to_string()];
        row.extend(profile.ranking(a).iter().map(|b| b.to_string()));
        csv.write_record(&row)?;
    }
    csv.flush()?;
    Ok(())
}

fn parse_id(field: &str, column: &str) -> Result<AgentId> {
    match field.parse::<u32>() {
        Ok(v) if v > 0 => Ok(AgentId(v)),
        _ => Err(Error::InvalidProfile(format!("bad {column} {field:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReviewRow {
    pub proposal_id: u32,
    pub reviewer_id: u32,
    pub approval: u8,
    pub prediction: f64,
}

/// A review file: the assignment it implies plus approvals and beliefs.
#[derive(Clone, Debug)]
pub struct ReviewData {
    pub assignment: ReviewAssignment,
    pub x: ApprovalProfile,
    pub y: BeliefProfile,
}

/// Reads `proposal_id,reviewer_id,approval,prediction` rows. The agent
/// count is the largest id present; every agent must review and be reviewed
/// the same number of times.
pub fn read_reviews<R: Read>(reader: R) -> Result<ReviewData> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rows: HashMap<(AgentId, AgentId), (bool, f64)> = HashMap::new();
    let mut n = 0;
    for row in csv.deserialize() {
        let row: ReviewRow = row?;
        if row.proposal_id == 0 || row.reviewer_id == 0 {
            return Err(Error::InvalidProfile("agent ids start at 1".into()));
        }
        if row.approval > 1 {
            return Err(Error::InvalidProfile(format!("approval must be 0 or 1 (got {})", row.approval)));
        }
        if !(0.0..=1.0).contains(&row.prediction) {
            return Err(Error::ProbabilityOutOfRange(row.prediction));
        }
        let (p, r) = (AgentId(row.proposal_id), AgentId(row.reviewer_id));
        if p == r {
            return Err(Error::InfeasibleAssignment(format!("agent {p} reviews itself")));
        }
        if rows.insert((p, r), (row.approval == 1, row.prediction)).is_some() {
            return Err(Error::InfeasibleAssignment(format!("agent {r} reviews {p} twice")));
        }
        n = n.max(p.index() + 1).max(r.index() + 1);
    }
    let mut reviews = vec![Vec::new(); n];
    for &(p, r) in rows.keys() {
        reviews[r.index()].push(p);
    }
    let assignment = ReviewAssignment::from_reviews(reviews)?;
    let x = ApprovalProfile::from_fn(&assignment, None, |p, r| Ok(rows[&(p, r)].0))?;
    let y = BeliefProfile::from_fn(&assignment, |p, r| Ok(rows[&(p, r)].1))?;
    Ok(ReviewData { assignment, x, y })
}

pub fn write_reviews<W: Write>(writer: W, x: &ApprovalProfile, y: &BeliefProfile, assignment: &ReviewAssignment) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for p in assignment.agents() {
        for &(r, approved) in x.board(p) {
            csv.serialize(ReviewRow {
                proposal_id: p.0,
                reviewer_id: r.0,
                approval: u8::from(approved),
                prediction: y.belief(p, r)?,
            })?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub proposal_id: u32,
    pub reviewer_id: u32,
    pub score: f64,
    pub share: f64,
}

/// Writes `proposal_id,reviewer_id,score,share`, the share being the
/// reviewer's probability in that proposal's sub-lottery.
pub fn write_scores<W: Write>(writer: W, scores: &ScoreTable, sub_lotteries: &[SubLottery]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for l in sub_lotteries {
        for &(r, score) in scores.board(l.proposal) {
            csv.serialize(ScoreRow { proposal_id: l.proposal.0, reviewer_id: r.0, score, share: l.share_of(r) })?;
        }
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DecileRow {
    decile: usize,
    mean_lottery_share: f64,
}

pub fn write_decile_summary<W: Write>(writer: W, rows: &[(usize, f64)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for &(decile, mean_lottery_share) in rows {
        csv.serialize(DecileRow { decile, mean_lottery_share })?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RecallCsvRow {
    d: usize,
    phi: f64,
    recall: f64,
    anti_recall: f64,
}

pub fn write_recall_summary<W: Write>(writer: W, rows: &[RecallRow]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for r in rows {
        csv.serialize(RecallCsvRow { d: r.d, phi: r.phi, recall: r.recall, anti_recall: r.anti_recall })?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorePredictionRow {
    pub proposal_id: u32,
    pub reviewer_id: u32,
    pub prediction: f64,
    pub final_score: f64,
}

/// Reads `proposal_id,reviewer_id,prediction,final_score` rows. The final
/// score is the proposal's aggregate and must agree across its rows.
pub fn read_score_predictions<R: Read>(reader: R) -> Result<(Vec<ScorePrediction>, HashMap<AgentId, f64>)> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut predictions = Vec::new();
    let mut finals: HashMap<AgentId, f64> = HashMap::new();
    for row in csv.deserialize() {
        let row: ScorePredictionRow = row?;
        if row.proposal_id == 0 || row.reviewer_id == 0 {
            return Err(Error::InvalidProfile("agent ids start at 1".into()));
        }
        if !row.prediction.is_finite() || !row.final_score.is_finite() {
            return Err(Error::InvalidProfile(format!("non-finite value in row for proposal {}", row.proposal_id)));
        }
        let proposal = AgentId(row.proposal_id);
        match finals.insert(proposal, row.final_score) {
            Some(prev) if prev != row.final_score => {
                return Err(Error::InvalidProfile(format!(
                    "proposal {proposal} has conflicting final scores {prev} and {}",
                    row.final_score
                )))
            }
            _ => {}
        }
        predictions.push(ScorePrediction { proposal, reviewer: AgentId(row.reviewer_id), prediction: row.prediction });
    }
    Ok((predictions, finals))
}

#[derive(Serialize)]
struct MadSummaryRow {
    reviewers: usize,
    mean: f64,
    sd: f64,
    below_0_25: f64,
    below_1_0: f64,
}

#[derive(Serialize)]
struct MadReviewerRow {
    reviewer_id: u32,
    reviews: usize,
    mad: f64,
}

/// Writes `reviewers,mean,sd,below_0_25,below_1_0` as a single row.
pub fn write_mad_summary<W: Write>(writer: W, summary: &MadSummary) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.serialize(MadSummaryRow {
        reviewers: summary.reviewers.len(),
        mean: summary.mean,
        sd: summary.sd,
        below_0_25: summary.below_0_25,
        below_1_0: summary.below_1_0,
    })?;
    csv.flush()?;
    Ok(())
}

/// Writes `reviewer_id,reviews,mad`.
pub fn write_mad_reviewers<W: Write>(writer: W, summary: &MadSummary) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for r in &summary.reviewers {
        csv.serialize(MadReviewerRow { reviewer_id: r.reviewer.0, reviews: r.reviews, mad: r.mad })?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write, T: Serialize>(mut writer: W, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, &item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads one JSON value per non-blank line.
pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::generate_assignment;

    #[test]
    fn score_predictions_need_consistent_finals() {
        let ok = "proposal_id,reviewer_id,prediction,final_score\n1,2,3.5,4\n1,3,4,4\n2,1,2,2.5\n";
        let (preds, finals) = read_score_predictions(ok.as_bytes()).unwrap();
        assert_eq!(preds.len(), 3);
        assert_eq!(finals[&AgentId(1)], 4.0);
        let bad = "proposal_id,reviewer_id,prediction,final_score\n1,2,3.5,4\n1,3,4,3\n";
        assert!(read_score_predictions(bad.as_bytes()).is_err());
    }

    #[test]
    fn profile_round_trip() {
        let text = "agent_id,rank_1,rank_2,rank_3\n2,3,1,4\n1,2,3,4\n3,1,2,4\n4,1,2,3\n";
        let p = read_profile(text.as_bytes()).unwrap();
        assert_eq!(p.ranking(AgentId(2)).as_slice(), &[AgentId(3), AgentId(1), AgentId(4)]);
        let mut out = Vec::new();
        write_profile(&mut out, &p).unwrap();
        assert_eq!(read_profile(out.as_slice()).unwrap(), p);
    }

    #[test]
    fn profile_gaps_rejected() {
        assert!(read_profile("agent_id,rank_1\n1,2\n3,1\n".as_bytes()).is_err());
        assert!(read_profile("agent_id,rank_1\n1,1\n2,1\n".as_bytes()).is_err());
    }

    #[test]
    fn review_round_trip() {
        let a = generate_assignment(9, 3, 1).unwrap();
        let x = ApprovalProfile::from_fn(&a, None, |p, r| Ok((p.0 + r.0) % 2 == 0)).unwrap();
        let y = BeliefProfile::from_fn(&a, |p, r| Ok(((p.0 * r.0) % 7) as f64 / 7.0)).unwrap();
        let mut out = Vec::new();
        write_reviews(&mut out, &x, &y, &a).unwrap();
        let back = read_reviews(out.as_slice()).unwrap();
        for p in a.agents() {
            for &r in a.board_of(p) {
                assert_eq!(back.x.get(p, r), x.get(p, r));
                assert_eq!(back.y.get(p, r), y.get(p, r));
            }
        }
    }

    #[test]
    fn self_review_rejected() {
        let text = "proposal_id,reviewer_id,approval,prediction\n1,1,1,0.5\n";
        assert!(matches!(read_reviews(text.as_bytes()), Err(Error::InfeasibleAssignment(_))));
        let text = "proposal_id,reviewer_id,approval,prediction\n1,2,1,1.5\n";
        assert!(matches!(read_reviews(text.as_bytes()), Err(Error::ProbabilityOutOfRange(_))));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut out = Vec::new();
        write_jsonl(&mut out, [1u32, 2, 3]).unwrap();
        assert_eq!(out, b"1\n2\n3\n");
        let back: Vec<u32> = read_jsonl(out.as_slice()).unwrap();
        assert_eq!(back, vec![1, 2, 3]);
    }
}
