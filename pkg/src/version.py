# src/version.py

# Semantic version of the lab
VERSION = "0.3.0"

# Human-readable release notes (UA); shown by --version and stored with every ledger run
RELEASE_NOTES = (
    "Що нового у 0.3.0 (порівняно з 0.2.x):\n"
    "• Конвеєри represent та dual: осциляційний і концентраційний доданки, подвійна трійка (u_k, ∇u_k) зі зміною ролей.\n"
    "• Генерація трійок із кускової структури сім'ї та звірка з еталонними трійками за моментами батареї.\n"
    "• Матричні s₀ в оцінці квазіопуклої оболонки (ламінати b⊗a).\n"
    "• Журнал запусків у SQLite (--ledger) та метрики Prometheus у текстовому файлі (--metrics-file).\n\n"
    "У попередній 0.2.x: перевірка p-qscb, розрив слабкої напівнеперервності, оракул опуклої оболонки."
)
