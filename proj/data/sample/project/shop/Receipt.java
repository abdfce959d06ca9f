package shop;

public class Receipt {
    private final String email;
    private final long amountCents;

    public Receipt(String email, long amountCents) {
        this.email = email;
        this.amountCents = amountCents;
    }

    public long getAmountCents() {
        return amountCents;
    }
}
