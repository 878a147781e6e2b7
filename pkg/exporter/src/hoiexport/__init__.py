"""Feature exporter for the hoiscore engine."""
