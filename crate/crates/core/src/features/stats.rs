//! Season-to-date game-statistic feature sets `F1`..`F10`.

use crate::corpus::{GameRecord, Side};

use super::{FeatureError, FeatureVector};

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.n += 1;
    }

    fn value(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

#[derive(Default)]
struct TeamAverages {
    cover_margin: Mean,
    ou_margin: Mean,
    scored: Mean,
    allowed: Mean,
    total: Mean,
    spread_plus_points: Mean,
    interceptions: Mean,
    fumbles: Mean,
    sacked: Mean,
    // WTS wins over decided (non-push) games at this team's venue role
    venue_covers: Mean,
}

/// `F1`..`F10` for `game` from earlier games of the same season.
///
/// `history` may contain any earlier games of the season; only those
/// involving the two teams are used. Averages over an empty set are 0. The
/// WTS percentages in `F9` ignore pushes.
pub fn game_stat_features(game: &GameRecord, history: &[&GameRecord]) -> Result<FeatureVector, FeatureError> {
    for h in history {
        if h.game_id == game.game_id {
            return Err(FeatureError::Leakage(format!("history contains game {} itself", game.game_id)));
        }
        if h.season != game.season || h.week >= game.week {
            return Err(FeatureError::Leakage(format!(
                "history game {} (season {} week {}) is not earlier in the season of {} (week {})",
                h.game_id, h.season, h.week, game.game_id, game.week
            )));
        }
    }

    let mut fv = FeatureVector::new();
    fv.insert("F1.spread", game.spread)?;
    fv.insert("F2.ou_line", game.ou_line)?;

    for side in Side::BOTH {
        let team = game.team(side);
        let mut acc = TeamAverages::default();
        for h in history {
            let Some(hs) = h.side_of(team) else { continue };
            let (Some(pf), Some(pa), Some(total), Some(cover)) =
                (h.points_for(hs), h.points_against(hs), h.total_points(), h.cover_margin(hs))
            else {
                return Err(FeatureError::MissingResult(h.game_id.clone()));
            };
            let (pf, pa, total) = (f64::from(pf), f64::from(pa), f64::from(total));
            acc.cover_margin.push(cover);
            acc.ou_margin.push(total - h.ou_line);
            acc.scored.push(pf);
            acc.allowed.push(pa);
            acc.total.push(total);
            acc.spread_plus_points.push(h.spread_for(hs) + pf);
            let b = h.box_stats(hs);
            acc.interceptions.push(f64::from(b.interceptions_thrown));
            acc.fumbles.push(f64::from(b.fumbles_lost));
            acc.sacked.push(f64::from(b.times_sacked));
            if hs == side && cover != 0.0 {
                acc.venue_covers.push(if cover > 0.0 { 1.0 } else { 0.0 });
            }
        }
        let s = side.name();
        fv.insert(format!("F3.{s}.avg_cover_margin"), acc.cover_margin.value())?;
        fv.insert(format!("F4.{s}.avg_ou_margin"), acc.ou_margin.value())?;
        fv.insert(format!("F5.{s}.avg_points_scored"), acc.scored.value())?;
        fv.insert(format!("F6.{s}.avg_points_allowed"), acc.allowed.value())?;
        fv.insert(format!("F7.{s}.avg_total_points"), acc.total.value())?;
        fv.insert(format!("F8.{s}.avg_spread_plus_points"), acc.spread_plus_points.value())?;
        fv.insert(format!("F9.{s}.{s}_wts_pct"), acc.venue_covers.value())?;
        fv.insert(format!("F10.{s}.avg_interceptions_thrown"), acc.interceptions.value())?;
        fv.insert(format!("F10.{s}.avg_fumbles_lost"), acc.fumbles.value())?;
        fv.insert(format!("F10.{s}.avg_times_sacked"), acc.sacked.value())?;
    }
    Ok(fv)
}
